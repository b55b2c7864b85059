"""Benchmark sweeps over generated scenes and their CSV reports.

Three tables come out of a sweep: one row per episode, per-object-count means, and
per-depth means. Columns are fixed; wall-clock columns are left blank unless
``record_times`` is set, which keeps the files byte-identical across runs for
deterministic planner settings.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geometry import generate_scene
from .motion import MotionPlannerHandle
from .network import ObjectCostWeights, SolveResult, solve

DEFAULT_COUNTS = (4, 8, 15, 20, 30, 42, 49, 64)

EPISODE_COLUMNS = (
    "object_count", "repeat", "seed", "outcome", "depth", "objects_rearranged",
    "motion_planning_attempts", "motion_executions", "expansions", "task_planning_work",
    "collision_checks", "grasp_failures", "task_planning_time", "motion_planning_time",
    "execution_time",
)
SUMMARY_COLUMNS = (
    "object_count", "episodes", "mean_depth", "mean_task_planning_time",
    "mean_motion_planning_time", "mean_motion_planning_attempts", "mean_motion_executions",
    "mean_objects_rearranged", "success_rate", "mean_task_planning_work",
)
DEPTH_COLUMNS = (
    "depth", "episodes", "mean_task_planning_work", "mean_task_planning_time",
    "mean_motion_planning_attempts", "mean_execution_time",
)
_TIMED = {"task_planning_time", "motion_planning_time", "execution_time"}


@dataclass
class BenchConfig:
    object_counts: list[int] = field(default_factory=lambda: list(DEFAULT_COUNTS))
    repeats: int = 3
    seed_base: int = 0
    planner: MotionPlannerHandle = field(default_factory=MotionPlannerHandle)
    p_fail: float = 0.2
    depth_limit_per_object: int = 10
    weights: ObjectCostWeights = field(default_factory=ObjectCostWeights)
    record_times: bool = True

    def __post_init__(self):
        if not self.object_counts or min(self.object_counts) < 1:
            raise ValueError("object counts must be >= 1")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.depth_limit_per_object < 1:
            raise ValueError("depth limit per object must be >= 1")
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")

    def episode_seed(self, count: int, repeat: int) -> int:
        return self.seed_base + 1000 * repeat + count

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "planner" in d:
            d["planner"] = MotionPlannerHandle(**d["planner"])
        if "weights" in d:
            d["weights"] = ObjectCostWeights(**d["weights"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["planner"] = self.planner.to_dict()
        d["weights"] = self.weights.to_dict()
        return d


@dataclass
class EpisodeRow:
    values: dict

    def __getitem__(self, key):
        return self.values[key]


def run_episode(config: BenchConfig, count: int, repeat: int) -> tuple[EpisodeRow, SolveResult]:
    seed = config.episode_seed(count, repeat)
    scene = generate_scene(count, seed)
    result = solve(scene, config.weights, config.planner,
                   limit=config.depth_limit_per_object * count, rng_seed=seed, p_fail=config.p_fail)
    log = result.log.to_dict(timings=True)
    row = {"object_count": count, "repeat": repeat, "seed": seed}
    for col in EPISODE_COLUMNS[3:]:
        row[col] = log[col] if (col not in _TIMED or config.record_times) else None
    return EpisodeRow(row), result


def run_sweep(config: BenchConfig, progress=None) -> list[EpisodeRow]:
    rows = []
    for count in config.object_counts:
        for repeat in range(config.repeats):
            row, _ = run_episode(config, count, repeat)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def summarize(rows: list[EpisodeRow]) -> list[dict]:
    out = []
    for count in sorted({r["object_count"] for r in rows}):
        group = [r for r in rows if r["object_count"] == count]
        out.append({
            "object_count": count,
            "episodes": len(group),
            "mean_depth": _mean(r["depth"] for r in group),
            "mean_task_planning_time": _mean(r["task_planning_time"] for r in group),
            "mean_motion_planning_time": _mean(r["motion_planning_time"] for r in group),
            "mean_motion_planning_attempts": _mean(r["motion_planning_attempts"] for r in group),
            "mean_motion_executions": _mean(r["motion_executions"] for r in group),
            "mean_objects_rearranged": _mean(r["objects_rearranged"] for r in group),
            "success_rate": _mean(float(r["outcome"] == "solved") for r in group),
            "mean_task_planning_work": _mean(r["task_planning_work"] for r in group),
        })
    return out


def by_depth(rows: list[EpisodeRow]) -> list[dict]:
    out = []
    for depth in sorted({r["depth"] for r in rows}):
        group = [r for r in rows if r["depth"] == depth]
        out.append({
            "depth": depth,
            "episodes": len(group),
            "mean_task_planning_work": _mean(r["task_planning_work"] for r in group),
            "mean_task_planning_time": _mean(r["task_planning_time"] for r in group),
            "mean_motion_planning_attempts": _mean(r["motion_planning_attempts"] for r in group),
            "mean_execution_time": _mean(r["execution_time"] for r in group),
        })
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(records, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        vals = r.values if isinstance(r, EpisodeRow) else r
        w.writerow([_cell(vals[c]) for c in columns])
    return buf.getvalue()


def report_paths(out) -> tuple[Path, Path, Path]:
    out = Path(out)
    stem = out.with_suffix("")
    return out, stem.with_name(stem.name + ".summary.csv"), stem.with_name(stem.name + ".by-depth.csv")


def write_reports(rows: list[EpisodeRow], out) -> tuple[Path, Path, Path]:
    paths = report_paths(out)
    texts = (to_csv(rows, EPISODE_COLUMNS), to_csv(summarize(rows), SUMMARY_COLUMNS),
             to_csv(by_depth(rows), DEPTH_COLUMNS))
    for p, text in zip(paths, texts):
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    return paths


@dataclass(frozen=True)
class StateSpaceReport:
    objects: int
    propositions: int
    states: int
    mutex_consistent_states: int
    reference_template_nodes: int
    reference_iterations: int
    ours_template_nodes: int
    ours_iterations: int

    @property
    def reference_andor_states(self) -> int:
        return self.reference_template_nodes * self.reference_iterations

    @property
    def ours_andor_states(self) -> int:
        return self.ours_template_nodes * self.ours_iterations

    def lines(self) -> list[str]:
        return [
            f"objects: {self.objects}",
            f"propositions: {self.propositions}",
            f"states: {self.states}",
            f"mutex-consistent states: {self.mutex_consistent_states}",
            f"and/or states (5-node template, 5 iterations): "
            f"{self.reference_template_nodes}x{self.reference_iterations} = {self.reference_andor_states}",
            f"and/or states (this template, {self.ours_iterations} iterations): "
            f"{self.ours_template_nodes}x{self.ours_iterations} = {self.ours_andor_states}",
        ]


def state_space_report(objects: int = 6) -> StateSpaceReport:
    from .andor import TEMPLATE_SIZE
    from .baseline import enumerate_state_space

    size = enumerate_state_space(objects)
    # worst case for the toy: every non-target object is moved once, then the target
    iterations = objects - 1
    return StateSpaceReport(objects, size.propositions, size.states, size.mutex_consistent,
                            5, iterations, TEMPLATE_SIZE, iterations)
