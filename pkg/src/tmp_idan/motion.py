"""Motion planners over the gripper's 2D configuration space.

Two interchangeable planners share one entry point, :func:`plan`:

* ``rrt`` grows a goal-biased rapidly-exploring random tree and shortcut-smooths
  the result. Probabilistically complete; bounded by a wall-clock budget and an
  iteration cap.
* ``grid`` runs an 8-connected breadth-first search over free cells of an
  ``h``-spaced lattice. Deterministic. A "no plan" verdict is definitive for free
  space whose passages are at least ``sqrt(2) * h`` wide.

Every returned plan passes :func:`path_validate` at the ``h / 2`` check step.
"""

from __future__ import annotations

import math
import time
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .geometry import (
    CHAIN_TOLERANCE,
    FreeSpace,
    GoalRegion,
    Point,
    WorkspaceConfig,
)

PLANNER_KINDS = ("rrt", "grid")
_KIND_ALIASES = {"grid-bfs": "grid", "bfs": "grid"}


@dataclass(frozen=True)
class MotionPlannerHandle:
    kind: str = "rrt"
    time_budget: float = 1.0
    step: float = 0.02
    goal_bias: float = 0.1
    max_iterations: int = 50_000
    resolution: float = 0.005
    shortcut_attempts: int = 100

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in PLANNER_KINDS:
            raise ValueError(f"unknown planner kind {self.kind!r}")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must lie in [0, 1]")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def check_step(self) -> float:
        return self.resolution / 2

    def scaled(self, factor: float) -> "MotionPlannerHandle":
        """Same planner with ``factor`` times the time budget."""
        return MotionPlannerHandle(self.kind, self.time_budget * factor, self.step, self.goal_bias,
                                   int(self.max_iterations * factor), self.resolution,
                                   self.shortcut_attempts)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "time_budget": self.time_budget, "step": self.step,
                "goal_bias": self.goal_bias, "max_iterations": self.max_iterations,
                "resolution": self.resolution, "shortcut_attempts": self.shortcut_attempts}


@dataclass
class MotionPlan:
    """Piecewise-linear gripper path; the held object (if any) rides along at ``grasp_offset``."""

    waypoints: np.ndarray
    holding: int | None = None
    grasp_offset: Point | None = None
    check_step: float = 0.0025

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 2)

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        return float(np.hypot(*np.diff(self.waypoints, axis=0).T).sum()) if len(self.waypoints) > 1 else 0.0

    def at(self, s: float) -> np.ndarray:
        """Position at arc-length fraction ``s`` in [0, 1]."""
        seg = np.hypot(*np.diff(self.waypoints, axis=0).T) if len(self.waypoints) > 1 else np.zeros(0)
        total = seg.sum()
        if total == 0.0:
            return self.waypoints[0].copy()
        target = min(max(s, 0.0), 1.0) * total
        acc = np.concatenate([[0.0], np.cumsum(seg)])
        i = min(int(np.searchsorted(acc, target, side="right")) - 1, len(seg) - 1)
        t = (target - acc[i]) / seg[i] if seg[i] > 0 else 0.0
        return self.waypoints[i] + t * (self.waypoints[i + 1] - self.waypoints[i])

    def to_dict(self) -> dict:
        return {
            "waypoints": [[float(x), float(y)] for x, y in self.waypoints],
            "holding": self.holding,
            "grasp_offset": None if self.grasp_offset is None else [float(v) for v in self.grasp_offset],
            "check_step": self.check_step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MotionPlan":
        off = d.get("grasp_offset")
        return cls(np.array(d["waypoints"], dtype=float), d.get("holding"),
                   None if off is None else tuple(off), d.get("check_step", 0.0025))


@dataclass
class MotionQuery:
    start: Point
    goal: GoalRegion
    scene: WorkspaceConfig
    holding: int | None = None
    grasp_offset: Point | None = None


@dataclass
class PlannerStats:
    queries: int = 0
    found: int = 0
    collision_checks: int = 0
    iterations: int = 0
    time: float = 0.0


def plan(query: MotionQuery, handle: MotionPlannerHandle, rng: np.random.Generator | None = None,
         stats: PlannerStats | None = None, cache: "GridCache | None" = None) -> MotionPlan | None:
    """Collision-free path from ``query.start`` into ``query.goal``, or None if none was found."""
    t0 = time.perf_counter()
    free = FreeSpace(query.scene, query.holding, query.grasp_offset)
    start = np.asarray(query.start, dtype=float)
    if not free.point_free(start):
        raise ValueError("motion query starts in collision")
    wp = _plan_waypoints(query, handle, rng, free, start, cache)
    if stats is not None:
        stats.queries += 1
        stats.found += wp is not None
        stats.collision_checks += free.checks
        stats.time += time.perf_counter() - t0
    if wp is None:
        return None
    return MotionPlan(wp, query.holding, query.grasp_offset, handle.check_step)


def _plan_waypoints(query, handle, rng, free, start, cache):
    goal = query.goal
    if goal.contains(start) and (goal.is_point or free.point_free(start)):
        return start[None, :].copy()
    if goal.is_point:
        if not free.point_free(goal.center):
            return None
    elif not len(goal.free_samples(free)):
        # no collision-free pose in the goal region at all
        return None
    if handle.kind == "grid":
        return _grid_plan(query, handle, free, start, cache)
    if rng is None:
        rng = np.random.default_rng(0)
    return _rrt_plan(query, handle, free, start, rng)


def path_validate(plan: MotionPlan, scene: WorkspaceConfig, goal: GoalRegion | None = None,
                  start=None, step: float | None = None) -> bool:
    """Re-check a plan densely against ``scene``; optionally its start pose and goal membership."""
    wp = plan.waypoints
    if not len(wp) or not np.isfinite(wp).all():
        return False
    if start is not None and math.dist(wp[0], start) > CHAIN_TOLERANCE:
        return False
    if goal is not None and not goal.contains(wp[-1]):
        return False
    free = FreeSpace(scene, plan.holding, plan.grasp_offset)
    return free.path_free(wp, plan.check_step if step is None else step)


# -- grid BFS ----------------------------------------------------------------

class _Grid:
    """Free lattice for one (scene, footprint) pair plus a BFS tree from one start cell."""

    def __init__(self, free: FreeSpace, h: float):
        b = free.bounds
        self.h = h
        self.nx = int(math.floor(b.width / h + 1e-9))
        self.ny = int(math.floor(b.height / h + 1e-9))
        self.x0 = b.x0 + (b.width - (self.nx - 1) * h) / 2
        self.y0 = b.y0 + (b.height - (self.ny - 1) * h) / 2
        xs = self.x0 + h * np.arange(self.nx)
        ys = self.y0 + h * np.arange(self.ny)
        # inflate obstacles by the worst chord depth of a diagonal step
        pair = [r + rp for _, rp in free.parts for r in free.radii] or [1.0]
        infl = h * h / (2.0 * min(pair))
        mask = np.ones((self.ny, self.nx), dtype=bool)
        for off, rp in free.parts:
            okx = (xs + off[0] - rp >= b.x0) & (xs + off[0] + rp <= b.x1)
            oky = (ys + off[1] - rp >= b.y0) & (ys + off[1] + rp <= b.y1)
            mask &= oky[:, None] & okx[None, :]
            for c, r in zip(free.centers, free.radii):
                R = r + rp + infl
                cx, cy = c[0] - off[0], c[1] - off[1]
                i0 = max(0, int(math.floor((cx - R - self.x0) / h)))
                i1 = min(self.nx, int(math.ceil((cx + R - self.x0) / h)) + 1)
                j0 = max(0, int(math.floor((cy - R - self.y0) / h)))
                j1 = min(self.ny, int(math.ceil((cy + R - self.y0) / h)) + 1)
                if i0 >= i1 or j0 >= j1:
                    continue
                dx = xs[i0:i1] - cx
                dy = ys[j0:j1] - cy
                mask[j0:j1, i0:i1] &= (dy[:, None] ** 2 + dx[None, :] ** 2) >= R * R
        self.mask = mask
        self.xs, self.ys = xs, ys
        self._graph = None

    def coords(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return np.stack([self.xs[idx % self.nx], self.ys[idx // self.nx]], axis=-1)

    def near(self, p, radius: float) -> np.ndarray:
        """Free cell indices within ``radius`` of ``p``, nearest first (ties by index)."""
        h = self.h
        i0 = max(0, int(math.floor((p[0] - radius - self.x0) / h)))
        i1 = min(self.nx, int(math.ceil((p[0] + radius - self.x0) / h)) + 1)
        j0 = max(0, int(math.floor((p[1] - radius - self.y0) / h)))
        j1 = min(self.ny, int(math.ceil((p[1] + radius - self.y0) / h)) + 1)
        if i0 >= i1 or j0 >= j1:
            return np.zeros(0, dtype=int)
        jj, ii = np.mgrid[j0:j1, i0:i1]
        idx = (jj * self.nx + ii).ravel()
        idx = idx[self.mask.ravel()[idx]]
        d = np.hypot(self.xs[idx % self.nx] - p[0], self.ys[idx // self.nx] - p[1])
        keep = d <= radius
        idx, d = idx[keep], d[keep]
        return idx[np.lexsort((idx, d))]

    def graph(self) -> csr_matrix:
        if self._graph is None:
            ny, nx, free = self.ny, self.nx, self.mask
            ids = np.arange(nx * ny).reshape(ny, nx)
            rows, cols = [], []
            for dy, dx in ((0, 1), (1, 0), (1, 1), (1, -1)):
                ys_, yd = slice(0, ny - dy), slice(dy, ny)
                xs_, xd = (slice(0, nx - dx), slice(dx, nx)) if dx >= 0 else (slice(-dx, nx), slice(0, nx + dx))
                m = free[ys_, xs_] & free[yd, xd]
                rows.append(ids[ys_, xs_][m])
                cols.append(ids[yd, xd][m])
            r = np.concatenate(rows)
            c = np.concatenate(cols)
            n = nx * ny
            self._graph = csr_matrix((np.ones(2 * len(r), dtype=np.int8),
                                      (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n))
            self._graph.sort_indices()
        return self._graph

    def bfs(self, s: int):
        order, pred = breadth_first_order(self.graph(), s, directed=True, return_predecessors=True)
        rank = np.full(self.nx * self.ny, -1, dtype=np.int64)
        rank[order] = np.arange(len(order))
        return rank, pred


class GridCache:
    """Memo of lattices and BFS trees keyed by scene, footprint and start cell.

    Planning stays a pure function of its inputs; the cache only skips recomputing
    identical lattices, e.g. when one solve step queries many goals from one pose.
    """

    def __init__(self, size: int = 8):
        self.size = size
        self._grids: OrderedDict = OrderedDict()
        self._trees: OrderedDict = OrderedDict()

    def _get(self, store, key, make):
        if key in store:
            store.move_to_end(key)
            return store[key]
        val = make()
        store[key] = val
        if len(store) > self.size:
            store.popitem(last=False)
        return val

    def grid(self, query: MotionQuery, free: FreeSpace, h: float) -> _Grid:
        key = (query.scene.fingerprint(), query.holding, _offset_key(query.grasp_offset), h)
        return self._get(self._grids, key, lambda: _Grid(free, h))

    def tree(self, query: MotionQuery, grid: _Grid, s: int):
        key = (query.scene.fingerprint(), query.holding, _offset_key(query.grasp_offset), grid.h, s)
        return self._get(self._trees, key, lambda: grid.bfs(s))


def _offset_key(off):
    return None if off is None else (float(off[0]), float(off[1]))


def _grid_plan(query, handle, free, start, cache):
    h = handle.resolution
    cache = cache or GridCache(size=2)
    grid = cache.grid(query, free, h)
    step = handle.check_step
    s = next((int(i) for i in grid.near(start, 2.0 * h)
              if free.segment_free(start, grid.coords(i), step)), None)
    if s is None:
        return None
    rank, pred = cache.tree(query, grid, s)
    goal = query.goal
    # candidate goal cells: reachable free cells near the region, in BFS order
    if goal.is_point:
        cand = grid.near(goal.center, 2.0 * h)
    else:
        cand = grid.near(goal.center, goal.r_max + 2.0 * h)
        d = goal.distance(grid.coords(cand))
        cand = cand[d <= 2.0 * h]
    cand = cand[rank[cand] >= 0]
    cand = cand[np.argsort(rank[cand], kind="stable")]
    for c in cand:
        p = grid.coords(c)
        q = goal.project(p)
        if not free.point_free(q) or not free.segment_free(p, q, step):
            continue
        cells = [int(c)]
        while cells[-1] != s:
            cells.append(int(pred[cells[-1]]))
        cells.reverse()
        raw = np.vstack([start[None, :], grid.coords(np.array(cells)), q[None, :]])
        raw = _dedupe(raw)
        smooth = _greedy_shortcut(_compress(raw), free, step)
        return smooth if free.path_free(smooth, step) else raw
    return None


def _dedupe(w: np.ndarray) -> np.ndarray:
    keep = np.ones(len(w), dtype=bool)
    keep[1:] = np.hypot(*np.diff(w, axis=0).T) > 0.0
    return w[keep]


def _compress(w: np.ndarray) -> np.ndarray:
    """Drop interior waypoints where the heading does not change."""
    if len(w) < 3:
        return w
    d = np.diff(w, axis=0)
    cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
    dot = (d[:-1] * d[1:]).sum(axis=1)
    turn = (np.abs(cross) > 1e-12) | (dot <= 0)
    return np.vstack([w[:1], w[1:-1][turn], w[-1:]])


def _greedy_shortcut(w: np.ndarray, free: FreeSpace, step: float) -> np.ndarray:
    """From each anchor, jump to the farthest later waypoint in straight-line sight."""
    out = [w[0]]
    i = 0
    n = len(w)
    while i < n - 1:
        j = n - 1
        while j > i + 1 and not free.segment_free(w[i], w[j], step):
            j -= 1
        out.append(w[j])
        i = j
    return np.array(out)


# -- RRT -----------------------------------------------------------------------

def _rrt_plan(query, handle, free, start, rng):
    goal = query.goal
    b = free.bounds
    step = handle.check_step
    eta = handle.step
    deadline = time.perf_counter() + handle.time_budget
    cap = handle.max_iterations + 1
    nodes = np.empty((cap, 2))
    parent = np.empty(cap, dtype=np.int64)
    nodes[0] = start
    parent[0] = -1
    n = 1
    pool = None if goal.is_point else goal.free_samples(free)
    lo = np.array([b.x0, b.y0])
    span = np.array([b.width, b.height])
    reached = -1
    for _ in range(handle.max_iterations):
        if time.perf_counter() > deadline:
            break
        if rng.random() < handle.goal_bias:
            s = _goal_sample(goal, free, rng, pool)
        else:
            s = lo + rng.random(2) * span
        diff = nodes[:n] - s
        i = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        v = s - nodes[i]
        dist = math.hypot(v[0], v[1])
        if dist == 0.0:
            continue
        new = s if dist <= eta else nodes[i] + v * (eta / dist)
        if not free.segment_free(nodes[i], new, step):
            continue
        nodes[n] = new
        parent[n] = i
        n += 1
        if goal.contains(new):
            reached = n - 1
            break
    if reached < 0:
        return None
    path = [reached]
    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))
    path.reverse()
    w = nodes[path].copy()
    return _random_shortcut(w, free, step, handle.shortcut_attempts, rng)


def _goal_sample(goal: GoalRegion, free: FreeSpace, rng, pool):
    if goal.is_point:
        return np.asarray(goal.center, dtype=float)
    for _ in range(8):
        p = goal.sample(rng)
        if free.point_free(p):
            return p
    return pool[int(rng.integers(len(pool)))]


def _random_shortcut(w: np.ndarray, free: FreeSpace, step: float, attempts: int, rng) -> np.ndarray:
    pts = list(w)
    for _ in range(attempts):
        if len(pts) < 3:
            break
        i, j = sorted(int(k) for k in rng.choice(len(pts), size=2, replace=False))
        if j - i < 2:
            continue
        if free.segment_free(pts[i], pts[j], step):
            pts = pts[:i + 1] + pts[j:]
    return np.array(pts)

