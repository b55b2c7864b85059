"""Planar table-top world: disc objects, a free-flying disc gripper and a storage area.

Coordinates are meters. The table is ``[0, W] x [0, H]``; the storage rectangle sits
below it (negative ``y``) with an empty approach lane in between that also holds the
gripper's entry pose. The gripper may move anywhere inside the bounding box of
table, lane and storage.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

GRIPPER_RADIUS = 0.02
GRASP_TOLERANCE = 0.005
CHAIN_TOLERANCE = 1e-9
# Distances within this of the radius sum count as contact, not collision.
CONTACT_TOLERANCE = 1e-9
STORAGE_PITCH = 0.15
STORAGE_MARGIN = 0.1
SCENE_FORMAT = "tmp-idan-scene/1"

Point = tuple[float, float]


class SceneError(ValueError):
    """Raised for geometrically invalid scenes or failed scene sampling."""


class StalePlanError(RuntimeError):
    """A plan does not match the live scene it is executed against."""


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def contains(self, p: Sequence[float], margin: float = 0.0) -> bool:
        return (self.x0 + margin <= p[0] <= self.x1 - margin
                and self.y0 + margin <= p[1] <= self.y1 - margin)

    def intersects(self, other: "Rect") -> bool:
        return not (other.x0 >= self.x1 or other.x1 <= self.x0
                    or other.y0 >= self.y1 or other.y1 <= self.y0)

    def union_box(self, other: "Rect") -> "Rect":
        return Rect(min(self.x0, other.x0), min(self.y0, other.y0),
                    max(self.x1, other.x1), max(self.y1, other.y1))

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass
class ObjectState:
    id: int
    center: Point
    radius: float
    held: bool = False
    in_storage: bool = False


@dataclass(frozen=True)
class Obstacle:
    """Immovable disc (fixture); never picked, never moved."""

    center: Point
    radius: float


@dataclass
class Configuration:
    """Gripper pose. ``grasp_offset`` is the held object's center relative to the gripper."""

    position: Point
    gripper_radius: float = GRIPPER_RADIUS
    holding: int | None = None
    grasp_offset: Point | None = None


@dataclass
class WorkspaceConfig:
    table: Rect
    storage: Rect
    entry: Point
    objects: list[ObjectState]
    target_id: int
    gripper: Configuration = None  # type: ignore[assignment]
    obstacles: list[Obstacle] = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        if self.gripper is None:
            self.gripper = Configuration(tuple(self.entry))

    @property
    def bounds(self) -> Rect:
        """Region the gripper and any carried object must stay inside."""
        return self.table.union_box(self.storage)

    def object(self, obj_id: int) -> ObjectState:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise KeyError(f"no object with id {obj_id}")

    @property
    def target(self) -> ObjectState:
        return self.object(self.target_id)

    def movable_ids(self) -> list[int]:
        """Non-target objects still on the table."""
        return [o.id for o in self.objects
                if o.id != self.target_id and not o.in_storage and not o.held]

    def stored(self) -> list[ObjectState]:
        return [o for o in self.objects if o.in_storage]

    def without(self, ids: Iterable[int]) -> "WorkspaceConfig":
        """Copy with the given objects deleted (used by the removal oracle)."""
        drop = set(ids)
        out = snapshot(self)
        out.objects = [o for o in out.objects if o.id not in drop]
        return out

    def validate(self) -> None:
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneError("duplicate object ids")
        if self.target_id not in ids:
            raise SceneError(f"target id {self.target_id} not among objects")
        if self.storage.intersects(self.table):
            raise SceneError("storage overlaps the table")
        for o in self.objects:
            if o.radius <= 0:
                raise SceneError(f"object {o.id} has non-positive radius")
            region = self.storage if o.in_storage else self.table
            if not o.held and not region.contains(o.center, o.radius - CONTACT_TOLERANCE):
                raise SceneError(f"object {o.id} not inside its region")
        if overlapping_pairs(self):
            raise SceneError(f"overlapping objects: {overlapping_pairs(self)}")
        for o in self.objects:
            for b in self.obstacles:
                if not o.held and math.dist(o.center, b.center) < o.radius + b.radius - CONTACT_TOLERANCE:
                    raise SceneError(f"object {o.id} overlaps a fixture")
        if not collision_free(self.gripper, self):
            raise SceneError("gripper starts in collision")

    def fingerprint(self) -> tuple:
        """Hashable summary of everything that affects collision checking."""
        return (
            tuple(self.bounds.as_list()),
            tuple((o.id, o.center, o.radius, o.held, o.in_storage) for o in self.objects),
            tuple((b.center, b.radius) for b in self.obstacles),
        )


def snapshot(scene: WorkspaceConfig) -> WorkspaceConfig:
    """Deep copy standing in for ground-truth scene perception."""
    return copy.deepcopy(scene)


def overlapping_pairs(scene: WorkspaceConfig) -> list[tuple[int, int]]:
    """Pairs of non-held objects whose discs overlap (contact allowed)."""
    objs = [o for o in scene.objects if not o.held]
    pairs = []
    for i, a in enumerate(objs):
        for b in objs[i + 1:]:
            if math.dist(a.center, b.center) < a.radius + b.radius - CONTACT_TOLERANCE:
                pairs.append((a.id, b.id))
    return pairs


class FreeSpace:
    """Vectorized collision predicate for one scene and one gripper footprint.

    The footprint is the gripper disc plus, when holding, the held object's disc at
    ``grasp_offset``. Obstacles are every non-held object and every fixture.
    """

    def __init__(self, scene: WorkspaceConfig, holding: int | None = None,
                 grasp_offset: Point | None = None, gripper_radius: float | None = None):
        self.scene = scene
        self.bounds = scene.bounds
        rg = scene.gripper.gripper_radius if gripper_radius is None else gripper_radius
        discs = [(o.center, o.radius) for o in scene.objects
                 if o.id != holding and not o.held]
        discs += [(b.center, b.radius) for b in scene.obstacles]
        self.centers = np.array([d[0] for d in discs], dtype=float).reshape(-1, 2)
        self.radii = np.array([d[1] for d in discs], dtype=float)
        parts = [((0.0, 0.0), rg)]
        if holding is not None:
            if grasp_offset is None:
                raise ValueError("holding requires a grasp offset")
            parts.append((tuple(grasp_offset), scene.object(holding).radius))
        self.parts = parts
        self.checks = 0

    def points_free(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        self.checks += len(pts)
        ok = np.ones(len(pts), dtype=bool)
        b = self.bounds
        for off, r in self.parts:
            p = pts + np.asarray(off)
            ok &= ((p[:, 0] - r >= b.x0 - CONTACT_TOLERANCE) & (p[:, 0] + r <= b.x1 + CONTACT_TOLERANCE)
                   & (p[:, 1] - r >= b.y0 - CONTACT_TOLERANCE) & (p[:, 1] + r <= b.y1 + CONTACT_TOLERANCE))
            if len(self.radii):
                d2 = ((p[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
                lim = self.radii[None, :] + r - CONTACT_TOLERANCE
                ok &= ~(d2 < lim * lim).any(axis=1)
        return ok

    def point_free(self, p) -> bool:
        return bool(self.points_free(p)[0])

    def segment_free(self, a, b, step: float) -> bool:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        n = max(1, int(math.ceil(float(np.hypot(*(b - a))) / step)))
        t = np.linspace(0.0, 1.0, n + 1)[:, None]
        return bool(self.points_free(a + t * (b - a)).all())

    def path_free(self, waypoints, step: float) -> bool:
        w = np.asarray(waypoints, dtype=float).reshape(-1, 2)
        if len(w) == 1:
            return self.point_free(w[0])
        return all(self.segment_free(w[i], w[i + 1], step) for i in range(len(w) - 1))


def collision_free(q: Configuration, scene: WorkspaceConfig) -> bool:
    """True iff the gripper (and its held object) overlaps nothing and stays in bounds."""
    return FreeSpace(scene, q.holding, q.grasp_offset, q.gripper_radius).point_free(q.position)


@dataclass(frozen=True)
class GoalRegion:
    """Annulus ``r_min <= |p - center| <= r_max`` of gripper positions (a point if both are 0)."""

    center: Point
    r_min: float = 0.0
    r_max: float = 0.0

    @property
    def is_point(self) -> bool:
        return self.r_max <= 0.0

    def contains(self, p, tol: float = CHAIN_TOLERANCE) -> bool:
        d = math.dist(p, self.center)
        return self.r_min - tol <= d <= self.r_max + tol

    def distance(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return np.maximum(self.r_min - d, 0.0) + np.maximum(d - self.r_max, 0.0)

    def project(self, p) -> np.ndarray:
        """Closest point of the region to ``p``."""
        c = np.asarray(self.center, dtype=float)
        v = np.asarray(p, dtype=float) - c
        d = float(np.hypot(*v))
        if self.is_point:
            return c.copy()
        if d == 0.0:
            v, d = np.array([1.0, 0.0]), 1.0
        return c + v / d * min(max(d, self.r_min), self.r_max)

    def dense_samples(self, angles: int = 720, rings: int = 3) -> np.ndarray:
        if self.is_point:
            return np.array([self.center], dtype=float)
        th = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
        rs = np.linspace(self.r_min, self.r_max, rings)
        r, t = np.meshgrid(rs, th)
        return np.stack([self.center[0] + r.ravel() * np.cos(t.ravel()),
                         self.center[1] + r.ravel() * np.sin(t.ravel())], axis=1)

    def free_samples(self, free: FreeSpace, angles: int = 720, rings: int = 3) -> np.ndarray:
        s = self.dense_samples(angles, rings)
        return s[free.points_free(s)]

    def free_fraction(self, free: FreeSpace, angles: int = 720, rings: int = 3) -> float:
        s = self.dense_samples(angles, rings)
        return float(free.points_free(s).mean())

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.is_point:
            return np.array(self.center, dtype=float)
        # uniform by area over the annulus
        r = math.sqrt(rng.uniform(self.r_min ** 2, self.r_max ** 2))
        t = rng.uniform(0.0, 2 * math.pi)
        return np.array([self.center[0] + r * math.cos(t), self.center[1] + r * math.sin(t)])


def grasp_region(obj: ObjectState, scene: WorkspaceConfig,
                 tolerance: float = GRASP_TOLERANCE) -> GoalRegion:
    """Gripper positions touching ``obj`` within ``tolerance``.

    Only the collision-free part is usable; callers restrict with a
    :class:`FreeSpace` for the empty gripper (see :meth:`GoalRegion.free_samples`).
    """
    if obj.in_storage:
        raise ValueError(f"object {obj.id} is in storage")
    inner = scene.gripper.gripper_radius + obj.radius
    return GoalRegion(tuple(obj.center), inner, inner + tolerance)


def grasp_offset(obj: ObjectState, gripper_pos) -> Point:
    """Held-object offset for a grasp taken at ``gripper_pos``."""
    return (float(obj.center[0] - gripper_pos[0]), float(obj.center[1] - gripper_pos[1]))


def storage_slots(scene: WorkspaceConfig) -> list[Point]:
    """Storage grid centers in scan order: rows bottom-to-top, each row left-to-right."""
    s = scene.storage
    xs = []
    x = s.x0 + STORAGE_MARGIN
    while x <= s.x1 - STORAGE_MARGIN + 1e-12:
        xs.append(round(x, 12))
        x += STORAGE_PITCH
    ys = []
    y = s.y0 + STORAGE_MARGIN
    while y <= s.y1 - STORAGE_MARGIN + 1e-12:
        ys.append(round(y, 12))
        y += STORAGE_PITCH
    return [(x, y) for y in ys for x in xs]


def storage_pose(scene: WorkspaceConfig, obj_id: int, offset: Point) -> Point | None:
    """First slot (in scan order) where ``obj_id`` fits with the gripper holding it at ``offset``.

    Returns the object's center there, or None when storage is full.
    """
    obj = scene.object(obj_id)
    free = FreeSpace(scene, holding=obj_id, grasp_offset=offset)
    stored = scene.stored()
    for slot in storage_slots(scene):
        if any(math.dist(slot, o.center) < o.radius + obj.radius - CONTACT_TOLERANCE for o in stored):
            continue
        if not scene.storage.contains(slot, obj.radius):
            continue
        grip = (slot[0] - offset[0], slot[1] - offset[1])
        if free.point_free(grip):
            return slot
    return None


class Outcome(str, Enum):
    OK = "ok"
    GRASP_FAILED = "grasp-failed"


@dataclass(frozen=True)
class FailureModel:
    """Grasp failures: each pick fails independently with probability ``p_fail``."""

    p_fail: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")


class Simulator:
    """Live scene plus kinematic pick/place execution with grasp-failure injection."""

    def __init__(self, scene: WorkspaceConfig, failure: FailureModel | None = None,
                 rng: np.random.Generator | None = None, check_overlaps: bool = True):
        self.scene = snapshot(scene)
        self.failure = failure or FailureModel()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.check_overlaps = check_overlaps

    def snapshot(self) -> WorkspaceConfig:
        return snapshot(self.scene)

    def execute_plan(self, plan, verb: str, obj_id: int | None) -> Outcome:
        """Move the gripper along ``plan`` then apply ``verb`` ("pick", "place-in-storage",
        "place-target" or "move")."""
        scene = self.scene
        g = scene.gripper
        wp = np.asarray(plan.waypoints, dtype=float)
        if math.dist(wp[0], g.position) > CHAIN_TOLERANCE:
            raise StalePlanError("plan does not start at the current gripper pose")
        if plan.holding != g.holding:
            raise StalePlanError("plan footprint does not match the gripper's load")
        free = FreeSpace(scene, g.holding, g.grasp_offset, g.gripper_radius)
        if not free.path_free(wp, plan.check_step):
            raise StalePlanError("plan collides with the current scene")
        g.position = (float(wp[-1][0]), float(wp[-1][1]))
        if g.holding is not None:
            held = scene.object(g.holding)
            held.center = (g.position[0] + g.grasp_offset[0], g.position[1] + g.grasp_offset[1])

        outcome = Outcome.OK
        if verb == "pick":
            obj = scene.object(obj_id)
            if g.holding is not None:
                raise StalePlanError("pick with a loaded gripper")
            if not grasp_region(obj, scene).contains(g.position):
                raise StalePlanError(f"gripper not in grasp region of object {obj_id}")
            if self.failure.p_fail > 0 and self.rng.random() < self.failure.p_fail:
                outcome = Outcome.GRASP_FAILED
            else:
                obj.held = True
                g.holding = obj_id
                g.grasp_offset = grasp_offset(obj, g.position)
        elif verb == "place-in-storage":
            obj = scene.object(obj_id)
            if g.holding != obj_id:
                raise StalePlanError(f"not holding object {obj_id}")
            if not scene.storage.contains(obj.center, obj.radius - CONTACT_TOLERANCE):
                raise StalePlanError("placement pose is outside storage")
            obj.held = False
            obj.in_storage = True
            g.holding = None
            g.grasp_offset = None
        elif verb == "place-target":
            if g.holding != obj_id or obj_id != scene.target_id:
                raise StalePlanError("place-target without holding the target")
            if math.dist(g.position, scene.entry) > CHAIN_TOLERANCE:
                raise StalePlanError("target not delivered to the entry pose")
        elif verb != "move":
            raise ValueError(f"unknown verb {verb!r}")
        if self.check_overlaps and overlapping_pairs(scene):
            raise StalePlanError(f"overlap after execution: {overlapping_pairs(scene)}")
        return outcome


@dataclass(frozen=True)
class SceneParams:
    width: float = 1.0
    height: float = 0.6
    storage_depth: float = 1.05
    lane: float = 0.15
    radius_range: tuple[float, float] = (0.02, 0.05)
    gripper_radius: float = GRIPPER_RADIUS
    entry_clearance: float = 0.13
    min_gap: float = 0.0
    max_attempts: int = 20000

    def table(self) -> Rect:
        return Rect(0.0, 0.0, self.width, self.height)

    def storage(self) -> Rect:
        return Rect(0.0, -self.lane - self.storage_depth, self.width, -self.lane)

    def entry(self) -> Point:
        return (self.width / 2, -self.lane / 2)


def empty_scene(params: SceneParams = SceneParams(), seed: int | None = None) -> WorkspaceConfig:
    return WorkspaceConfig(table=params.table(), storage=params.storage(), entry=params.entry(),
                           objects=[], target_id=-1, seed=seed,
                           gripper=Configuration(params.entry(), params.gripper_radius))


def generate_scene(object_count: int, seed: int, params: SceneParams = SceneParams()) -> WorkspaceConfig:
    """Rejection-sample ``object_count`` non-overlapping discs and a uniformly random target.

    Discs stay fully on the table and clear of the entry zone. Deterministic in
    ``(object_count, seed, params)``; raises SceneError once ``max_attempts`` draws
    fail to place the next disc.
    """
    if object_count < 1:
        raise SceneError("object_count must be >= 1")
    lo, hi = params.radius_range
    table = params.table()
    if object_count * math.pi * lo * lo > table.width * table.height:
        raise SceneError("object count exceeds the table's packing bound")
    rng = np.random.default_rng(seed)
    entry = params.entry()
    placed: list[tuple[float, float, float]] = []
    for _ in range(object_count):
        for _attempt in range(params.max_attempts):
            r = float(rng.uniform(lo, hi))
            x = float(rng.uniform(r, table.width - r))
            y = float(rng.uniform(r, table.height - r))
            if math.hypot(x - entry[0], y - entry[1]) < params.entry_clearance + r:
                continue
            if all(math.hypot(x - px, y - py) >= r + pr + params.min_gap for px, py, pr in placed):
                placed.append((x, y, r))
                break
        else:
            raise SceneError(f"could not place object {len(placed)} after {params.max_attempts} attempts")
    objects = [ObjectState(i, (round(x, 6), round(y, 6)), round(r, 6)) for i, (x, y, r) in enumerate(placed)]
    # rounding can shave the gap between touching discs; drop back to the raw values if so
    scene = empty_scene(params, seed)
    scene.objects = objects
    if overlapping_pairs(scene):
        scene.objects = [ObjectState(i, (x, y), r) for i, (x, y, r) in enumerate(placed)]
    scene.target_id = int(rng.integers(object_count))
    scene.validate()
    return scene


# -- scene files ---------------------------------------------------------------

def scene_to_dict(scene: WorkspaceConfig) -> dict:
    return {
        "format": SCENE_FORMAT,
        "seed": scene.seed,
        "table": scene.table.as_list(),
        "storage": scene.storage.as_list(),
        "entry": list(scene.entry),
        "gripper_radius": scene.gripper.gripper_radius,
        "target_id": scene.target_id,
        "objects": [{"id": o.id, "x": o.center[0], "y": o.center[1], "radius": o.radius}
                    for o in scene.objects],
        "obstacles": [{"x": b.center[0], "y": b.center[1], "radius": b.radius}
                      for b in scene.obstacles],
    }


def scene_from_dict(d: dict) -> WorkspaceConfig:
    if d.get("format") != SCENE_FORMAT:
        raise SceneError(f"unsupported scene format {d.get('format')!r}")
    entry = tuple(d["entry"])
    scene = WorkspaceConfig(
        table=Rect(*d["table"]),
        storage=Rect(*d["storage"]),
        entry=entry,
        objects=[ObjectState(o["id"], (o["x"], o["y"]), o["radius"]) for o in d["objects"]],
        target_id=d["target_id"],
        gripper=Configuration(entry, d["gripper_radius"]),
        obstacles=[Obstacle((b["x"], b["y"]), b["radius"]) for b in d.get("obstacles", [])],
        seed=d.get("seed"),
    )
    scene.validate()
    return scene


def dumps_scene(scene: WorkspaceConfig) -> str:
    return json.dumps(scene_to_dict(scene), indent=2) + "\n"


def loads_scene(text: str) -> WorkspaceConfig:
    return scene_from_dict(json.loads(text))


def save_scene(scene: WorkspaceConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_scene(scene))


def load_scene(path) -> WorkspaceConfig:
    with open(path, encoding="utf-8") as f:
        return loads_scene(f.read())


def scene_hash(scene: WorkspaceConfig) -> str:
    """Digest of the scene file contents (initial layout only)."""
    return hashlib.sha256(dumps_scene(scene).encode()).hexdigest()
