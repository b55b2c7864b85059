"""Iteratively deepened AND/OR graph networks for retrieving a target from clutter.

:func:`solve` runs the full loop: grow an augmented graph rooted at the current
scene, repeatedly pick the cheapest feasible state, turn its action into motion
queries through :class:`TMPInterface`, and grow a fresh graph whenever the current
one ends at the failure terminal, an execution fails, or nothing is feasible. The
network stops when a graph is solved or the depth limit is reached.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .andor import (
    AugmentedGraph,
    FeasibleState,
    GraphStatus,
    Selector,
    TEMPLATE_SIZE,
    Verb,
    ActionTemplate,
    build_clutter_graph,
)
from .geometry import (
    FailureModel,
    GoalRegion,
    Outcome,
    Simulator,
    WorkspaceConfig,
    grasp_offset,
    grasp_region,
    snapshot,
    storage_pose,
)
from .motion import GridCache, MotionPlan, MotionPlannerHandle, MotionQuery, PlannerStats, plan


@dataclass(frozen=True)
class ObjectCostWeights:
    """Weights of the blocker-selection cost (distances in meters, radius in meters)."""

    w_base: float = 1.0
    w_gripper: float = 0.0
    w_size: float = 0.0
    w_target: float = 0.8

    def __post_init__(self):
        ws = (self.w_base, self.w_gripper, self.w_size, self.w_target)
        if min(ws) < 0 or max(ws) <= 0:
            raise ValueError("weights must be non-negative with at least one positive")

    def object_cost(self, obj_id: int, scene: WorkspaceConfig) -> float:
        o = scene.object(obj_id)
        return (self.w_base * math.dist(o.center, scene.entry)
                + self.w_gripper * math.dist(o.center, scene.gripper.position)
                + self.w_size * o.radius
                + self.w_target * math.dist(o.center, scene.target.center))

    def to_dict(self) -> dict:
        return {"w_base": self.w_base, "w_gripper": self.w_gripper,
                "w_size": self.w_size, "w_target": self.w_target}


class TransitionReason(str, Enum):
    GRAPH_FAILED = "graph-failed-after-rearrangement"
    EXECUTION_RETRY = "execution-failure-retry"
    NO_FEASIBLE_STATE = "no-feasible-state"


class NetworkStatus(str, Enum):
    RUNNING = "running"
    SOLVED = "solved"
    EXHAUSTED = "exhausted"


class NetworkError(RuntimeError):
    """Growing the network where no transition is defined."""


@dataclass
class TransitionRecord:
    source: int
    dest: int
    reason: TransitionReason
    # moved objects as (id, old center, new center); empty means no object moved
    snapshot_delta: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"from": self.source, "to": self.dest, "reason": self.reason.value,
                "snapshot_delta": [{"id": i, "from": list(a), "to": list(b)}
                                   for i, a, b in self.snapshot_delta] or "none"}


def object_delta(before: WorkspaceConfig, after: WorkspaceConfig) -> list:
    old = {o.id: o for o in before.objects}
    moved = []
    for o in after.objects:
        p = old[o.id]
        if (p.center, p.held, p.in_storage) != (o.center, o.held, o.in_storage):
            moved.append((o.id, tuple(p.center), tuple(o.center)))
    return moved


class GraphNetwork:
    """Ordered augmented graphs linked by transitions, capped at ``depth_limit`` graphs."""

    def __init__(self, depth_limit: int):
        if depth_limit < 1:
            raise ValueError("depth limit must be >= 1")
        self.depth_limit = depth_limit
        self.graphs: list[AugmentedGraph] = []
        self.transitions: list[TransitionRecord] = []
        self.status = NetworkStatus.RUNNING

    @property
    def depth(self) -> int:
        return len(self.graphs)

    @property
    def current(self) -> AugmentedGraph:
        return self.graphs[-1]

    def start(self, scene: WorkspaceConfig) -> AugmentedGraph:
        if self.graphs:
            raise NetworkError("network already started")
        g = build_clutter_graph(snapshot(scene))
        self.graphs.append(g)
        return g

    def refresh_status(self) -> NetworkStatus:
        if self.graphs and self.current.status is GraphStatus.SOLVED:
            self.status = NetworkStatus.SOLVED
        return self.status


def grow_next_graph(net: GraphNetwork, reason: TransitionReason, scene: WorkspaceConfig) -> AugmentedGraph:
    """Append a fresh template graph rooted at ``scene`` and record the transition."""
    if net.status is not NetworkStatus.RUNNING or not net.graphs:
        raise NetworkError(f"cannot grow a network that is {net.status.value}")
    prev = net.current
    if prev.status is GraphStatus.SOLVED:
        raise NetworkError("no transition out of a solved graph")
    if net.depth >= net.depth_limit:
        raise NetworkError(f"depth limit {net.depth_limit} reached")
    reason = TransitionReason(reason)
    delta = object_delta(prev.snapshot, scene)
    if reason is TransitionReason.EXECUTION_RETRY and delta:
        raise NetworkError("a retry transition must not change the scene")
    g = build_clutter_graph(snapshot(scene))
    net.transitions.append(TransitionRecord(net.depth - 1, net.depth, reason, delta))
    net.graphs.append(g)
    return g


@dataclass
class Selection:
    node: int
    arc: int
    object: int | None
    cost: float


def select_optimal_state(candidates: list[FeasibleState], scene: WorkspaceConfig,
                         weights: ObjectCostWeights, excluded=(), chosen: int | None = None
                         ) -> Selection | None:
    """Cheapest candidate; re-arrangement candidates add the best blocker's geometric cost.

    Ties go to the lower object id, then the lower arc id. Returns None when every
    candidate is unusable (no blocker left outside ``excluded``).
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    best = None
    for c in candidates:
        action = c.action
        if action is None:
            raise ValueError("candidates must carry their action template")
        total = c.cost
        if action.selector is Selector.BLOCKER:
            if action.verb is Verb.APPROACH:
                pool = [i for i in scene.movable_ids() if i not in excluded]
                if not pool:
                    continue
                scored = sorted((weights.object_cost(i, scene), i) for i in pool)
                obj = scored[0][1]
                total += scored[0][0]
            else:
                if chosen is None or chosen in excluded:
                    continue
                obj = chosen
        else:
            obj = scene.target_id
        key = (total, obj, c.arc)
        if best is None or key < best[0]:
            best = (key, Selection(c.node, c.arc, obj, total))
    return None if best is None else best[1]


class MotionOutcome(str, Enum):
    OK = "planned+executed"
    PLAN_NOT_FOUND = "plan-not-found"
    EXECUTION_FAILED = "execution-failed"


@dataclass
class ActionRecord:
    """One executed motion in the episode, in execution order."""

    graph: int
    verb: str
    object: int
    outcome: str
    plan: MotionPlan
    place_at: tuple | None = None

    def to_dict(self) -> dict:
        return {"graph": self.graph, "verb": self.verb, "object": self.object,
                "outcome": self.outcome, "place_at": None if self.place_at is None else list(self.place_at),
                "plan": self.plan.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ActionRecord":
        return cls(d["graph"], d["verb"], d["object"], d["outcome"], MotionPlan.from_dict(d["plan"]),
                   None if d.get("place_at") is None else tuple(d["place_at"]))


@dataclass
class RemovalPlan:
    """Approach to an object's grasp region plus the carry to its destination."""

    approach: MotionPlan
    transport: MotionPlan
    place_at: tuple | None


def plan_removal(scene: WorkspaceConfig, obj_id: int, planner: MotionPlannerHandle,
                 rng: np.random.Generator | None = None, stats: PlannerStats | None = None,
                 cache: GridCache | None = None) -> RemovalPlan | None:
    """Plan grasping ``obj_id`` from the current gripper pose and carrying it away.

    The target is carried to the entry pose; any other object to the first free
    storage slot. None when either leg has no plan.
    """
    def query(start, goal, sc, holding=None, offset=None):
        return plan(MotionQuery(tuple(start), goal, sc, holding, offset), planner, rng, stats, cache)

    obj = scene.object(obj_id)
    approach = query(scene.gripper.position, grasp_region(obj, scene), scene)
    if approach is None:
        return None
    grip = approach.end
    off = grasp_offset(obj, grip)
    held = snapshot(scene)
    held.object(obj_id).held = True
    held.gripper.position = (float(grip[0]), float(grip[1]))
    held.gripper.holding = obj_id
    held.gripper.grasp_offset = off
    if obj_id == scene.target_id:
        place_at = None
        goal = GoalRegion(tuple(scene.entry))
    else:
        place_at = storage_pose(held, obj_id, off)
        if place_at is None:
            return None
        goal = GoalRegion((place_at[0] - off[0], place_at[1] - off[1]))
    transport = query(grip, goal, held, obj_id, off)
    if transport is None:
        return None
    return RemovalPlan(approach, transport, place_at)


@dataclass
class DispatchResult:
    outcome: MotionOutcome
    plans: list = field(default_factory=list)


class TMPInterface:
    """Maps symbolic actions to goal regions and motion plans, and runs them in simulation.

    ``approach`` is the graspability test: it plans to the object's grasp region and,
    from there, the carry to its destination (storage slot, or the entry pose for the
    target). Nothing moves. ``pick`` executes the approach and grasps; ``place-*``
    executes the carry.
    """

    def __init__(self, sim: Simulator, planner: MotionPlannerHandle, rng: np.random.Generator):
        self.sim = sim
        self.planner = planner
        self.rng = rng
        self.stats = PlannerStats()
        self.cache = GridCache() if planner.kind == "grid" else None
        self.executions = 0
        self.execution_time = 0.0
        self.trace: list[ActionRecord] = []
        self.graph_index = 0
        self._look: dict[int, RemovalPlan] = {}

    def reset_lookahead(self):
        self._look.clear()

    def knowledge_base(self) -> WorkspaceConfig:
        """Current geometry (scene perception is ground truth)."""
        return self.sim.snapshot()

    def _lookahead(self, obj_id: int) -> RemovalPlan | None:
        return plan_removal(self.knowledge_base(), obj_id, self.planner, self.rng, self.stats, self.cache)

    def dispatch(self, action: ActionTemplate, obj_id: int | None) -> DispatchResult:
        verb = action.verb
        if verb is Verb.NOOP:
            return DispatchResult(MotionOutcome.OK)
        if obj_id is None:
            raise ValueError(f"{action} needs an object")
        self.sim.scene.object(obj_id)  # unknown ids raise KeyError
        if verb is Verb.APPROACH or obj_id not in self._look:
            look = self._lookahead(obj_id)
            if look is None:
                self._look.pop(obj_id, None)
                return DispatchResult(MotionOutcome.PLAN_NOT_FOUND)
            self._look[obj_id] = look
        look = self._look[obj_id]
        if verb is Verb.APPROACH:
            return DispatchResult(MotionOutcome.OK, [look.approach, look.transport])
        if verb is Verb.PICK:
            out = self._execute(look.approach, "pick", obj_id)
            if out is Outcome.GRASP_FAILED:
                self._look.pop(obj_id, None)
                return DispatchResult(MotionOutcome.EXECUTION_FAILED, [look.approach])
            return DispatchResult(MotionOutcome.OK, [look.approach])
        sim_verb = "place-target" if verb is Verb.PLACE_TARGET else "place-in-storage"
        self._execute(look.transport, sim_verb, obj_id, look.place_at)
        self._look.pop(obj_id, None)
        return DispatchResult(MotionOutcome.OK, [look.transport])

    def _execute(self, p: MotionPlan, verb: str, obj_id: int, place_at=None) -> Outcome:
        t0 = time.perf_counter()
        out = self.sim.execute_plan(p, verb, obj_id)
        self.execution_time += time.perf_counter() - t0
        self.executions += 1
        self.trace.append(ActionRecord(self.graph_index, verb, obj_id, out.value, p, place_at))
        return out


def dispatch_action(action: ActionTemplate, obj_id: int | None, sim: Simulator,
                    planner: MotionPlannerHandle, rng: np.random.Generator | None = None) -> DispatchResult:
    """One-shot dispatch through a throwaway interface (no lookahead reuse)."""
    tmpi = TMPInterface(sim, planner, rng if rng is not None else np.random.default_rng(0))
    return tmpi.dispatch(action, obj_id)


@dataclass
class EpisodeLog:
    depth: int
    per_graph_expansions: list
    task_planning_time: float
    motion_planning_time: float
    execution_time: float
    motion_planning_attempts: int
    motion_executions: int
    objects_rearranged: int
    outcome: str
    seed: int
    task_planning_work: int = 0
    collision_checks: int = 0
    grasp_failures: int = 0
    transitions: dict = field(default_factory=dict)

    @property
    def expansions(self) -> int:
        return sum(self.per_graph_expansions)

    def to_dict(self, timings: bool = True) -> dict:
        d = {
            "outcome": self.outcome,
            "depth": self.depth,
            "objects_rearranged": self.objects_rearranged,
            "motion_planning_attempts": self.motion_planning_attempts,
            "motion_executions": self.motion_executions,
            "expansions": self.expansions,
            "per_graph_expansions": list(self.per_graph_expansions),
            "task_planning_work": self.task_planning_work,
            "collision_checks": self.collision_checks,
            "grasp_failures": self.grasp_failures,
            "transitions": dict(self.transitions),
            "seed": self.seed,
        }
        if timings:
            d["task_planning_time"] = self.task_planning_time
            d["motion_planning_time"] = self.motion_planning_time
            d["execution_time"] = self.execution_time
        return d


@dataclass
class SolveResult:
    log: EpisodeLog
    trace: list[ActionRecord]
    network: GraphNetwork
    final_scene: WorkspaceConfig
    config: dict

    @property
    def solved(self) -> bool:
        return self.log.outcome == NetworkStatus.SOLVED.value

    def rearranged_ids(self) -> list[int]:
        return [a.object for a in self.trace if a.verb == "place-in-storage"]


def default_depth_limit(scene: WorkspaceConfig) -> int:
    return 10 * len(scene.objects)


def solve(scene: WorkspaceConfig, weights: ObjectCostWeights | None = None,
          planner: MotionPlannerHandle | None = None, limit: int | None = None,
          rng_seed: int = 0, p_fail: float = 0.0) -> SolveResult:
    """Retrieve ``scene.target_id`` by growing a graph network of depth at most ``limit``."""
    scene.validate()
    weights = weights or ObjectCostWeights()
    planner = planner or MotionPlannerHandle()
    if limit is None:
        limit = default_depth_limit(scene)
    if limit < 1:
        raise ValueError("depth limit must be positive")
    plan_ss, fail_ss = np.random.SeedSequence(rng_seed).spawn(2)
    sim = Simulator(scene, FailureModel(p_fail), np.random.default_rng(fail_ss))
    tmpi = TMPInterface(sim, planner, np.random.default_rng(plan_ss))
    net = GraphNetwork(limit)
    tp = _Clock()
    with tp:
        g = net.start(sim.scene)
    queries = 0
    while True:
        reason, q = _run_graph(g, net, tmpi, weights, tp)
        queries += q
        if net.refresh_status() is NetworkStatus.SOLVED:
            break
        if net.depth >= limit:
            net.status = NetworkStatus.EXHAUSTED
            break
        with tp:
            g = grow_next_graph(net, reason, sim.scene)
        tmpi.graph_index = net.depth - 1

    expansions = [gr.expansions_count for gr in net.graphs]
    reasons: dict[str, int] = {}
    for t in net.transitions:
        reasons[t.reason.value] = reasons.get(t.reason.value, 0) + 1
    log = EpisodeLog(
        depth=net.depth,
        per_graph_expansions=expansions,
        task_planning_time=tp.total,
        motion_planning_time=tmpi.stats.time,
        execution_time=tmpi.execution_time,
        motion_planning_attempts=tmpi.stats.queries,
        motion_executions=tmpi.executions,
        objects_rearranged=len(sim.scene.stored()),
        outcome=net.status.value,
        seed=rng_seed,
        task_planning_work=sum(expansions) + queries,
        collision_checks=tmpi.stats.collision_checks,
        grasp_failures=sum(a.outcome == Outcome.GRASP_FAILED.value for a in tmpi.trace),
        transitions=reasons,
    )
    config = {"planner": planner.to_dict(), "weights": weights.to_dict(), "p_fail": p_fail,
              "limit": limit, "seed": rng_seed}
    return SolveResult(log, tmpi.trace, net, sim.snapshot(), config)


class _Clock:
    def __init__(self):
        self.total = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.total += time.perf_counter() - self._t0


def _run_graph(g: AugmentedGraph, net: GraphNetwork, tmpi: TMPInterface,
               weights: ObjectCostWeights, tp: _Clock):
    """Drive one graph to a terminal (or give up on it). Returns (transition reason, feasible-state queries)."""
    tmpi.reset_lookahead()
    excluded_arcs: set[int] = set()
    excluded_objs: set[int] = set()
    chosen = None
    queries = 0
    scene = tmpi.sim.scene
    while g.status is GraphStatus.ACTIVE:
        with tp:
            queries += 1
            cands = [c for c in g.next_feasible_states() if c.arc not in excluded_arcs]
            sel = select_optimal_state(cands, scene, weights, excluded_objs, chosen) if cands else None
        if sel is None:
            return TransitionReason.NO_FEASIBLE_STATE, queries
        arc = g.arcs[sel.arc]
        res = tmpi.dispatch(arc.action, sel.object)
        if res.outcome is MotionOutcome.PLAN_NOT_FOUND:
            if arc.action.selector is Selector.TARGET:
                excluded_arcs.add(arc.id)
            else:
                excluded_objs.add(sel.object)
            continue
        if res.outcome is MotionOutcome.EXECUTION_FAILED:
            return TransitionReason.EXECUTION_RETRY, queries
        if arc.action.verb is Verb.APPROACH and arc.action.selector is Selector.BLOCKER:
            chosen = sel.object
        with tp:
            g.mark_achieved(sel.node, sel.arc)
    return TransitionReason.GRAPH_FAILED, queries


__all__ = [
    "TEMPLATE_SIZE",
    "ActionRecord",
    "DispatchResult",
    "EpisodeLog",
    "GraphNetwork",
    "MotionOutcome",
    "NetworkError",
    "NetworkStatus",
    "RemovalPlan",
    "ObjectCostWeights",
    "Selection",
    "SolveResult",
    "TMPInterface",
    "TransitionReason",
    "TransitionRecord",
    "default_depth_limit",
    "dispatch_action",
    "grow_next_graph",
    "plan_removal",
    "select_optimal_state",
    "solve",
]
