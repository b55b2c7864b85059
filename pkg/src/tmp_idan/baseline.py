"""Ground-truth machinery: a propositional pick/place baseline and a removal-subset oracle.

The propositional model has ``clear(o)`` and ``holding(o)`` for every object plus a
single ``gripper-empty`` flag. Object 0 is the target. Geometry is ignored: putting
a removed object away clears the highest-index object that is still blocked, which
chains blockers one behind the other.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field

from .andor import TEMPLATE_SIZE
from .geometry import WorkspaceConfig
from .motion import GridCache, MotionPlannerHandle
from .network import plan_removal

MAX_PROPOSITIONAL_OBJECTS = 10
MAX_ORACLE_OBJECTS = 8


@dataclass(frozen=True)
class StateSpaceSize:
    propositions: int
    states: int
    # states with at most one held object and gripper-empty consistent with it
    mutex_consistent: int


def enumerate_state_space(object_count: int) -> StateSpaceSize:
    if object_count < 1:
        raise ValueError("object count must be >= 1")
    props = 2 * object_count + 1
    # clear bits free; holding none (gripper empty) or exactly one (gripper busy)
    consistent = 2 ** object_count * (object_count + 1)
    return StateSpaceSize(props, 2 ** props, consistent)


@dataclass(frozen=True)
class TaskPlanResult:
    length: int
    expansions: int
    plan: tuple[str, ...]


def _bits(k):
    clear = lambda i: 1 << i  # noqa: E731
    holding = lambda i: 1 << (k + i)  # noqa: E731
    return clear, holding, 1 << (2 * k)


def shortest_task_plan(object_count: int, blocked=frozenset({0})) -> TaskPlanResult:
    """Uniform-cost search from the initial state to ``holding(target)``.

    ``blocked`` lists the objects that start not clear (the target is object 0).
    Every action costs 1. Raises ValueError if ``object_count`` exceeds the cap or
    the goal is unreachable.
    """
    k = object_count
    if not 1 <= k <= MAX_PROPOSITIONAL_OBJECTS:
        raise ValueError(f"object count must lie in [1, {MAX_PROPOSITIONAL_OBJECTS}]")
    blocked = frozenset(blocked)
    if any(not 0 <= b < k for b in blocked):
        raise ValueError("blocked ids out of range")
    clear, holding, empty = _bits(k)
    start = empty
    for i in range(k):
        if i not in blocked:
            start |= clear(i)
    goal = holding(0)

    frontier = [(0, 0, start, ())]
    best = {start: 0}
    done = set()
    expansions = 0
    tie = itertools.count(1)
    while frontier:
        cost, _, s, plan = heapq.heappop(frontier)
        if s in done:
            continue
        done.add(s)
        expansions += 1
        if s & goal:
            return TaskPlanResult(cost, expansions, plan)
        for name, nxt in _successors(s, k):
            if nxt not in best or cost + 1 < best[nxt]:
                best[nxt] = cost + 1
                heapq.heappush(frontier, (cost + 1, next(tie), nxt, plan + (name,)))
    raise ValueError("target cannot be picked from this initial state")


def _successors(s: int, k: int):
    clear, holding, empty = _bits(k)
    if s & empty:
        for i in range(k):
            if s & clear(i):
                yield f"pick {i}", (s & ~empty & ~clear(i)) | holding(i)
        return
    for i in range(k):
        if s & holding(i):
            nxt = (s & ~holding(i)) | empty | clear(i)
            still_blocked = [j for j in range(k) if j != i and not nxt & clear(j)]
            if still_blocked:
                nxt |= clear(max(still_blocked))
            yield f"place {i}", nxt


@dataclass
class RemovalCertificate:
    """Removal subsets (sorted id tuples) after which the target can be retrieved."""

    sufficient: list[tuple[int, ...]] = field(default_factory=list)
    minimal: list[tuple[int, ...]] = field(default_factory=list)
    # sufficient subsets whose members can be taken away one after another
    removable: list[tuple[int, ...]] = field(default_factory=list)
    max_subset_size: int = 0

    @property
    def solvable(self) -> bool:
        return bool(self.removable)

    def to_dict(self) -> dict:
        return {"max_subset_size": self.max_subset_size,
                "sufficient": [list(s) for s in self.sufficient],
                "minimal": [list(s) for s in self.minimal],
                "removable": [list(s) for s in self.removable]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def target_retrievable(scene: WorkspaceConfig, planner: MotionPlannerHandle | None = None,
                       cache: GridCache | None = None) -> bool:
    """Grasp the target from the gripper pose and carry it back to the entry pose."""
    planner = planner or MotionPlannerHandle("grid")
    return plan_removal(scene, scene.target_id, planner, cache=cache) is not None


def removal_oracle(scene: WorkspaceConfig, planner: MotionPlannerHandle | None = None,
                   max_subset_size: int | None = None) -> RemovalCertificate:
    """Try every removal subset of non-target objects up to ``max_subset_size``.

    A subset is sufficient when deleting it leaves the target retrievable. It is
    removable when, in addition, some order exists in which each member can be
    grasped and carried to storage with the earlier members already gone.
    """
    planner = planner or MotionPlannerHandle("grid")
    if planner.kind != "grid":
        raise ValueError("the removal oracle needs the deterministic grid planner")
    others = sorted(o.id for o in scene.objects if o.id != scene.target_id and not o.in_storage)
    if len(scene.objects) > MAX_ORACLE_OBJECTS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_OBJECTS} objects")
    k = len(others) if max_subset_size is None else min(max_subset_size, len(others))
    cache = GridCache()
    cert = RemovalCertificate(max_subset_size=k)
    carried: dict[frozenset, bool] = {}

    def takeable(gone: frozenset, obj: int) -> bool:
        key = gone | {obj}
        if key not in carried:
            carried[key] = plan_removal(scene.without(gone), obj, planner, cache=cache) is not None
        return carried[key]

    def orderable(subset) -> bool:
        reach = {frozenset()}
        for _ in subset:
            reach = {g | {o} for g in reach for o in subset if o not in g and takeable(g, o)}
            if not reach:
                return False
        return True

    for size in range(k + 1):
        for subset in itertools.combinations(others, size):
            if target_retrievable(scene.without(subset), planner, cache):
                cert.sufficient.append(subset)
                if orderable(subset):
                    cert.removable.append(subset)
    found = [set(s) for s in cert.sufficient]
    cert.minimal = [s for s in cert.sufficient if not any(f < set(s) for f in found)]
    return cert


def andor_state_accounting(template_nodes: int = TEMPLATE_SIZE, iterations: int = 5) -> int:
    """Worst-case AND/OR states visited: template node count times network iterations."""
    return template_nodes * iterations
