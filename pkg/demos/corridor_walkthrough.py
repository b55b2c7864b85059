"""Walk through one retrieval: a target at the end of a dead-end corridor behind one blocker.

Run with ``python demos/corridor_walkthrough.py``.
"""

from tmp_idan.baseline import removal_oracle
from tmp_idan.motion import MotionPlannerHandle
from tmp_idan.network import solve
from tmp_idan.scenes import corridor_scene
from tmp_idan.trace import replay, trace_to_dict

grid = MotionPlannerHandle("grid")
scene = corridor_scene()
print(f"target {scene.target_id} at {scene.target.center}, {len(scene.objects) - 1} other object(s), "
      f"{len(scene.obstacles)} wall discs")

# What must go? The oracle tries every removal subset.
cert = removal_oracle(scene, grid)
print("minimal removal sets:", cert.minimal)

result = solve(scene, planner=grid, limit=5)
log = result.log
print(f"\n{log.outcome} at depth {log.depth}, {log.objects_rearranged} object(s) stored, "
      f"{log.motion_planning_attempts} motion queries, {log.motion_executions} executions")

for i, g in enumerate(result.network.graphs):
    print(f"\ngraph {i}: {g.status.value}, {g.expansions_count} expansions")
    print(g.dump(), end="")

print("\ntransitions:")
for t in result.network.transitions:
    print(" ", t.to_dict())

print("\nactions:")
for a in result.trace:
    print(f"  graph {a.graph}: {a.verb:<16} object {a.object}  {a.outcome:<12} "
          f"{len(a.plan.waypoints)} waypoints, {a.plan.length:.3f} m")

report = replay(trace_to_dict(result, scene), scene)
print(f"\nreplay: {report.actions} actions, {len(report.violations)} violations")
