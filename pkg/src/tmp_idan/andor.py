"""AND/OR graphs and the augmented, snapshot-rooted variant used per network iteration.

A hyper-arc maps a set of child nodes to one parent. The parent becomes reachable
when every child is achieved (AND); several hyper-arcs into one parent are
alternatives (OR). Graphs only grow and nodes are only ever achieved, never reset.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple


class NodeKind(str, Enum):
    INTERNAL = "internal"
    SUCCESS = "success-terminal"
    FAILURE = "failure-terminal"
    VIRTUAL_ROOT = "virtual-root"


class Verb(str, Enum):
    PICK = "pick"
    PLACE_IN_STORAGE = "place-in-storage"
    PLACE_TARGET = "place-target"
    APPROACH = "approach"
    NOOP = "noop"


class Selector(str, Enum):
    TARGET = "target"
    BLOCKER = "chosen-blocker"


class GraphStatus(str, Enum):
    ACTIVE = "active"
    SOLVED = "solved"
    FAILED = "failed"


class GraphError(RuntimeError):
    """Contract violation on an AND/OR graph (frozen graph, untraversable arc, ...)."""


_ALLOWED_ACTIONS = {
    (Verb.NOOP, Selector.TARGET),
    (Verb.APPROACH, Selector.TARGET),
    (Verb.APPROACH, Selector.BLOCKER),
    (Verb.PICK, Selector.TARGET),
    (Verb.PICK, Selector.BLOCKER),
    (Verb.PLACE_TARGET, Selector.TARGET),
    (Verb.PLACE_IN_STORAGE, Selector.BLOCKER),
}


@dataclass(frozen=True)
class ActionTemplate:
    verb: Verb
    selector: Selector = Selector.TARGET

    def __post_init__(self):
        if (self.verb, self.selector) not in _ALLOWED_ACTIONS:
            raise ValueError(f"action {self.verb.value}({self.selector.value}) not in the clutter domain")

    def __str__(self):
        return f"{self.verb.value}({self.selector.value})"


@dataclass
class Node:
    id: int
    label: str
    kind: NodeKind = NodeKind.INTERNAL
    achieved: bool = False

    @property
    def terminal(self) -> bool:
        return self.kind in (NodeKind.SUCCESS, NodeKind.FAILURE)


@dataclass(frozen=True)
class HyperArc:
    id: int
    children: frozenset
    parent: int
    action: ActionTemplate
    cost: float = 0.0
    virtual: bool = False


class FeasibleState(NamedTuple):
    node: int
    arc: int
    cost: float
    action: ActionTemplate | None = None


class AndOrGraph:
    """Acyclic AND/OR graph with achieved-set propagation."""

    def __init__(self):
        self.nodes: dict[int, Node] = {}
        self.arcs: dict[int, HyperArc] = {}
        self._expansions = 0

    def add_node(self, label: str, kind: NodeKind = NodeKind.INTERNAL) -> int:
        self._check_mutable()
        nid = len(self.nodes)
        self.nodes[nid] = Node(nid, label, kind)
        return nid

    def add_arc(self, children, parent: int, action: ActionTemplate, cost: float = 0.0,
                virtual: bool = False) -> int:
        self._check_mutable()
        children = frozenset(children)
        if not children:
            raise GraphError("a hyper-arc needs at least one child")
        missing = [n for n in (*children, parent) if n not in self.nodes]
        if missing:
            raise GraphError(f"unknown nodes {missing}")
        if parent in children:
            raise GraphError("a hyper-arc cannot lead back into one of its children")
        if cost < 0:
            raise GraphError("arc costs must be non-negative")
        for c in children:
            if self.nodes[c].terminal:
                raise GraphError(f"terminal node {c} cannot have outgoing hyper-arcs")
        if self._reaches(parent, children):
            raise GraphError("hyper-arc would close a cycle")
        aid = len(self.arcs)
        self.arcs[aid] = HyperArc(aid, children, parent, action, float(cost), virtual)
        return aid

    def _reaches(self, src: int, targets) -> bool:
        seen, stack = set(), [src]
        while stack:
            n = stack.pop()
            if n in targets:
                return True
            if n in seen:
                continue
            seen.add(n)
            stack.extend(a.parent for a in self.arcs.values() if n in a.children)
        return False

    def _check_mutable(self):
        pass

    def achieved(self) -> frozenset:
        return frozenset(n.id for n in self.nodes.values() if n.achieved)

    def traversable(self, arc_id: int) -> bool:
        arc = self.arcs[arc_id]
        return all(self.nodes[c].achieved for c in arc.children)

    def next_feasible_states(self) -> list[FeasibleState]:
        """Arcs whose children are all achieved and whose parent is not, ordered by arc id."""
        return [FeasibleState(a.parent, a.id, a.cost, a.action) for a in self.arcs.values()
                if not self.nodes[a.parent].achieved and self.traversable(a.id)]

    def mark_achieved(self, node: int, via: int) -> None:
        arc = self.arcs.get(via)
        if arc is None or arc.parent != node:
            raise GraphError(f"arc {via} does not lead to node {node}")
        if not self.traversable(via):
            raise GraphError(f"arc {via} has unachieved children")
        if self.nodes[node].achieved:
            raise GraphError(f"node {node} is already achieved")
        self.nodes[node].achieved = True
        self._expansions += 1

    @property
    def expansions_count(self) -> int:
        return self._expansions

    def dump(self) -> str:
        """Deterministic text form: one node per line, then one arc per line."""
        lines = [f"node {n.id} {n.label} {n.kind.value} {'achieved' if n.achieved else '-'}"
                 for n in self.nodes.values()]
        for a in self.arcs.values():
            kids = ",".join(str(c) for c in sorted(a.children))
            lines.append(f"arc {a.id} {kids}->{a.parent} {a.action} cost={a.cost:g}"
                         + (" virtual" if a.virtual else ""))
        return "\n".join(lines) + "\n"

    def structural_hash(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


_graph_ids = itertools.count()


class AugmentedGraph(AndOrGraph):
    """AND/OR graph with a virtual root standing for a workspace snapshot.

    The root is achieved on creation. Once a success terminal is achieved the graph
    is solved; a failure terminal without success makes it failed. Either way the
    graph is frozen from then on.
    """

    def __init__(self, snapshot=None, root_label: str = "current-configuration",
                 graph_id: int | None = None):
        super().__init__()
        self.id = next(_graph_ids) if graph_id is None else graph_id
        self.snapshot = snapshot
        self.root = super().add_node(root_label, NodeKind.VIRTUAL_ROOT)
        self.nodes[self.root].achieved = True
        self.status = GraphStatus.ACTIVE

    def _check_mutable(self):
        if getattr(self, "status", GraphStatus.ACTIVE) is not GraphStatus.ACTIVE:
            raise GraphError(f"graph {self.id} is {self.status.value}; it can no longer change")

    def add_node(self, label: str, kind: NodeKind = NodeKind.INTERNAL) -> int:
        if kind is NodeKind.VIRTUAL_ROOT:
            raise GraphError("an augmented graph has exactly one virtual root")
        return super().add_node(label, kind)

    def add_arc(self, children, parent: int, action: ActionTemplate, cost: float = 0.0,
                virtual: bool = False) -> int:
        children = frozenset(children)
        if (self.root in children) != virtual or (virtual and children != {self.root}):
            raise GraphError("virtual arcs, and only they, leave the root (alone)")
        if parent == self.root:
            raise GraphError("the root has no incoming arcs")
        return super().add_arc(children, parent, action, cost, virtual)

    def next_feasible_states(self) -> list[FeasibleState]:
        if self.status is not GraphStatus.ACTIVE:
            raise GraphError(f"graph {self.id} is {self.status.value}")
        return super().next_feasible_states()

    def mark_achieved(self, node: int, via: int) -> GraphStatus:
        self._check_mutable()
        super().mark_achieved(node, via)
        kinds = {n.kind for n in self.nodes.values() if n.achieved}
        if NodeKind.SUCCESS in kinds:
            self.status = GraphStatus.SOLVED
        elif NodeKind.FAILURE in kinds:
            self.status = GraphStatus.FAILED
        return self.status


# Fixed clutter-domain template. Target branch arcs cost 0 so grasping the target is
# always preferred; re-arrangement arcs cost 1 on top of the geometric blocker cost.
ROOT = 0
TARGET_GRASPABLE = 1
GRIPPER_EMPTY = 2
TARGET_PICKED = 3
TARGET_PLACED = 4
BLOCKER_CHOSEN = 5
BLOCKER_PICKED = 6
OBJECT_STORED = 7

TEMPLATE_NODES = (
    ("target-graspable", NodeKind.INTERNAL),
    ("gripper-empty", NodeKind.INTERNAL),
    ("target-picked", NodeKind.INTERNAL),
    ("target-placed", NodeKind.SUCCESS),
    ("blocker-chosen", NodeKind.INTERNAL),
    ("blocker-picked", NodeKind.INTERNAL),
    ("object-placed-in-storage", NodeKind.FAILURE),
)
TEMPLATE_ARCS = (
    ((ROOT,), GRIPPER_EMPTY, ActionTemplate(Verb.NOOP), 0.0),
    ((ROOT,), TARGET_GRASPABLE, ActionTemplate(Verb.APPROACH, Selector.TARGET), 0.0),
    ((ROOT,), BLOCKER_CHOSEN, ActionTemplate(Verb.APPROACH, Selector.BLOCKER), 1.0),
    ((TARGET_GRASPABLE, GRIPPER_EMPTY), TARGET_PICKED, ActionTemplate(Verb.PICK, Selector.TARGET), 0.0),
    ((TARGET_PICKED,), TARGET_PLACED, ActionTemplate(Verb.PLACE_TARGET, Selector.TARGET), 0.0),
    ((GRIPPER_EMPTY, BLOCKER_CHOSEN), BLOCKER_PICKED, ActionTemplate(Verb.PICK, Selector.BLOCKER), 1.0),
    ((BLOCKER_PICKED,), OBJECT_STORED, ActionTemplate(Verb.PLACE_IN_STORAGE, Selector.BLOCKER), 1.0),
)
TEMPLATE_SIZE = 1 + len(TEMPLATE_NODES)


def build_clutter_graph(snapshot=None) -> AugmentedGraph:
    """Fresh per-iteration graph: root -> {grasp-target branch, re-arrange-one-object branch}."""
    g = AugmentedGraph(snapshot)
    for label, kind in TEMPLATE_NODES:
        g.add_node(label, kind)
    for children, parent, action, cost in TEMPLATE_ARCS:
        g.add_arc(children, parent, action, cost, virtual=children == (ROOT,))
    return g


def next_feasible_states(g: AugmentedGraph) -> list[FeasibleState]:
    return g.next_feasible_states()


def mark_achieved(g: AugmentedGraph, node: int, via: int) -> GraphStatus:
    return g.mark_achieved(node, via)


def expansions_count(g: AndOrGraph) -> int:
    return g.expansions_count
