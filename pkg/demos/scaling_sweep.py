"""A quick scaling sweep with the grid planner, printed as a table.

The full RRT sweep is ``tmp-idan bench --out results/episodes.csv``. This one
takes well under a minute. Run with ``python demos/scaling_sweep.py``.
"""

from scipy import stats

from tmp_idan.bench import BenchConfig, by_depth, run_sweep, summarize
from tmp_idan.motion import MotionPlannerHandle

config = BenchConfig(object_counts=[4, 15, 30, 49, 64], repeats=3,
                     planner=MotionPlannerHandle("grid"), p_fail=0.2, record_times=True)
rows = run_sweep(config)
summary = summarize(rows)

print(f"{'K':>3} {'depth':>6} {'stored':>6} {'attempts':>8} {'TP [ms]':>8} {'MP [s]':>7} {'success':>7}")
for s in summary:
    print(f"{s['object_count']:>3} {s['mean_depth']:>6.2f} {s['mean_objects_rearranged']:>6.2f} "
          f"{s['mean_motion_planning_attempts']:>8.1f} {1000 * s['mean_task_planning_time']:>8.2f} "
          f"{s['mean_motion_planning_time']:>7.2f} {s['success_rate']:>7.0%}")

counts = [s["object_count"] for s in summary]
print("\nspearman(count, depth) =", round(stats.spearmanr(counts, [s["mean_depth"] for s in summary]).statistic, 3))

series = by_depth(rows)
r = stats.pearsonr([d["depth"] for d in series], [d["mean_task_planning_work"] for d in series]).statistic
print("pearson(depth, task-planning work) =", round(r, 4))
