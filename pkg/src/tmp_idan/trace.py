"""Serialized episode traces and the replay checker.

A trace file records everything needed to re-run an episode's motions against its
scene: the scene hash, the planner configuration, the logical episode log and every
executed motion plan. Wall-clock timings are left out so traces are byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .geometry import (
    CHAIN_TOLERANCE,
    FailureModel,
    GoalRegion,
    Outcome,
    Simulator,
    StalePlanError,
    WorkspaceConfig,
    grasp_region,
    scene_hash,
)
from .motion import MotionPlannerHandle, path_validate
from .network import ActionRecord, SolveResult

# never trust a recorded check step coarser than the default h/2
_MAX_CHECK_STEP = MotionPlannerHandle().check_step

TRACE_FORMAT = "tmp-idan-trace/1"


class TraceMismatchError(ValueError):
    """The trace was recorded on a different scene."""


def trace_to_dict(result: SolveResult, scene: WorkspaceConfig) -> dict:
    return {
        "format": TRACE_FORMAT,
        "scene_sha256": scene_hash(scene),
        "config": result.config,
        "log": result.log.to_dict(timings=False),
        "transitions": [t.to_dict() for t in result.network.transitions],
        "actions": [a.to_dict() for a in result.trace],
    }


def dumps_trace(result: SolveResult, scene: WorkspaceConfig) -> str:
    return json.dumps(trace_to_dict(result, scene), indent=2) + "\n"


def save_trace(result: SolveResult, scene: WorkspaceConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_trace(result, scene))


def load_trace(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("format") != TRACE_FORMAT:
        raise ValueError(f"not a {TRACE_FORMAT} file")
    return d


@dataclass
class ReplayReport:
    actions: int = 0
    violations: list[str] = field(default_factory=list)
    retrieved: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations


def replay(trace: dict, scene: WorkspaceConfig) -> ReplayReport:
    """Re-execute every recorded action in a fresh simulator and re-check it.

    Checks per action: the plan starts at the current gripper pose (within 1e-9 m),
    every waypoint and segment is collision-free at the plan's check step, and the
    end pose lies in the action's goal region. Grasp outcomes are forced to match
    the recording. Raises :class:`TraceMismatchError` on a scene mismatch.
    """
    if trace.get("scene_sha256") != scene_hash(scene):
        raise TraceMismatchError("trace was recorded on a different scene")
    sim = Simulator(scene, FailureModel(0.0))
    report = ReplayReport()
    for i, raw in enumerate(trace["actions"]):
        report.actions += 1
        try:
            act = ActionRecord.from_dict(raw)
        except (KeyError, TypeError, ValueError) as exc:
            report.violations.append(f"action {i}: malformed ({exc})")
            break
        problem = _check_action(act, sim.scene)
        if problem:
            report.violations.append(f"action {i} ({act.verb} {act.object}): {problem}")
            break
        # replay the recorded grasp outcome instead of redrawing it
        sim.failure = FailureModel(1.0 if act.outcome == Outcome.GRASP_FAILED.value else 0.0)
        try:
            out = sim.execute_plan(act.plan, act.verb, act.object)
        except (StalePlanError, KeyError) as exc:
            report.violations.append(f"action {i} ({act.verb} {act.object}): {exc}")
            break
        if out.value != act.outcome:
            report.violations.append(f"action {i}: outcome {out.value} != recorded {act.outcome}")
            break
        if act.place_at is not None and math.dist(sim.scene.object(act.object).center, act.place_at) > CHAIN_TOLERANCE:
            report.violations.append(f"action {i}: object landed off its recorded storage pose")
            break
        if act.verb == "place-target":
            report.retrieved = True
    if trace.get("log", {}).get("outcome") == "solved" and not report.retrieved and report.ok:
        report.violations.append("log says solved but the target was never delivered")
    return report


def _check_action(act: ActionRecord, scene: WorkspaceConfig) -> str | None:
    g = scene.gripper
    if act.plan.holding != g.holding:
        return "plan load does not match the gripper"
    if act.verb == "pick":
        goal = grasp_region(scene.object(act.object), scene)
    elif act.verb == "place-target":
        goal = GoalRegion(tuple(scene.entry))
    elif act.verb == "place-in-storage":
        if act.place_at is None:
            return "storage placement without a recorded pose"
        off = g.grasp_offset
        goal = GoalRegion((act.place_at[0] - off[0], act.place_at[1] - off[1]))
    else:
        return f"unknown verb {act.verb!r}"
    if math.dist(act.plan.start, g.position) > CHAIN_TOLERANCE:
        return "plan does not start where the previous one ended"
    if not goal.contains(act.plan.end):
        return "plan does not end in the goal region"
    if not path_validate(act.plan, scene, step=min(act.plan.check_step, _MAX_CHECK_STEP)):
        return "plan is not collision-free"
    return None
