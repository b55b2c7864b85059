"""Hand-built scenes with known answers, plus the small-scene regression set.

All scenes use the default table, storage and entry layout. Walls are rows of
overlapping immovable fixture discs; movable objects never touch them.
"""

from __future__ import annotations

import math

from .geometry import (
    GoalRegion,
    Obstacle,
    ObjectState,
    SceneParams,
    WorkspaceConfig,
    empty_scene,
    generate_scene,
    grasp_offset,
    grasp_region,
    snapshot,
)
from .motion import GridCache, MotionPlannerHandle, MotionQuery
from .network import plan_removal

WALL_RADIUS = 0.02
WALL_PITCH = 0.02
CORRIDOR_X = 0.5
TARGET_RADIUS = 0.03
TARGET_Y = 0.47


def wall(p0, p1, radius: float = WALL_RADIUS, pitch: float = WALL_PITCH) -> list[Obstacle]:
    """Fixture discs from ``p0`` to ``p1`` spaced ``pitch`` apart (both ends included)."""
    n = max(1, math.ceil(math.dist(p0, p1) / pitch))
    return [Obstacle((round(p0[0] + (p1[0] - p0[0]) * i / n, 6), round(p0[1] + (p1[1] - p0[1]) * i / n, 6)), radius)
            for i in range(n + 1)]


def ring(center, radius: float, wall_radius: float = WALL_RADIUS, pitch: float = WALL_PITCH) -> list[Obstacle]:
    n = math.ceil(2 * math.pi * radius / pitch)
    return [Obstacle((round(center[0] + radius * math.cos(2 * math.pi * i / n), 6),
                      round(center[1] + radius * math.sin(2 * math.pi * i / n), 6)), wall_radius)
            for i in range(n)]


def _scene(objects, obstacles=(), target_id: int = 0) -> WorkspaceConfig:
    s = empty_scene(SceneParams())
    s.objects = [ObjectState(i, (float(x), float(y)), float(r)) for i, (x, y, r) in enumerate(objects)]
    s.obstacles = list(obstacles)
    s.target_id = target_id
    s.validate()
    return s


def lone_target_scene() -> WorkspaceConfig:
    return _scene([(0.5, 0.3, TARGET_RADIUS)])


def corridor_scene(blockers=((0.0, 0.25, 0.04),), half_width: float = 0.055,
                   pinch: float | None = None, sealed: bool = False, extra=()) -> WorkspaceConfig:
    """Target at the closed end of a vertical dead-end corridor that opens toward the entry.

    ``blockers`` are ``(dx, y, radius)`` inside the corridor. ``pinch`` narrows the mouth
    to that free half-width; ``sealed`` closes the mouth entirely. ``extra`` adds
    ``(x, y, radius)`` objects elsewhere on the table.
    """
    off = half_width + WALL_RADIUS
    cap_y = TARGET_Y + TARGET_RADIUS + 0.01 + WALL_RADIUS
    walls = (wall((CORRIDOR_X - off, 0.02), (CORRIDOR_X - off, cap_y))
             + wall((CORRIDOR_X + off, 0.02), (CORRIDOR_X + off, cap_y))
             + wall((CORRIDOR_X - off, cap_y), (CORRIDOR_X + off, cap_y)))
    if sealed:
        walls += wall((CORRIDOR_X - off, 0.02), (CORRIDOR_X + off, 0.02))
    elif pinch is not None:
        walls += [Obstacle((CORRIDOR_X - pinch - WALL_RADIUS, 0.06), WALL_RADIUS),
                  Obstacle((CORRIDOR_X + pinch + WALL_RADIUS, 0.06), WALL_RADIUS)]
    objects = [(CORRIDOR_X, TARGET_Y, TARGET_RADIUS)]
    objects += [(CORRIDOR_X + dx, y, r) for dx, y, r in blockers]
    objects += list(extra)
    return _scene(objects, walls)


def walled_scene() -> WorkspaceConfig:
    """Target and one neighbor sealed inside a fixture ring; one free object outside."""
    center = (0.5, 0.3)
    objects = [(center[0], center[1], TARGET_RADIUS),
               (center[0] + 0.055, center[1], 0.02),
               (0.2, 0.3, 0.03)]
    return _scene(objects, ring(center, 0.1))


CANONICAL_SCENES = {
    "lone": lone_target_scene,
    "corridor": corridor_scene,
    "walled": walled_scene,
}

# (name, blockers) families placed inside the corridor
_BLOCKER_SETS = (
    ("empty", ()),
    ("one", ((0.0, 0.25, 0.04),)),
    ("small-off-center", ((0.03, 0.25, 0.015),)),
    ("two", ((0.0, 0.18, 0.04), (0.0, 0.33, 0.04))),
    ("one-plus-free", ((0.0, 0.25, 0.04),)),
    ("three", ((0.0, 0.14, 0.035), (0.0, 0.25, 0.035), (0.0, 0.36, 0.035))),
)


def regression_scenes() -> dict[str, WorkspaceConfig]:
    """Named scenes, each with at most three movable objects besides the target."""
    out: dict[str, WorkspaceConfig] = {name: make() for name, make in CANONICAL_SCENES.items()}
    for hw, pinches in ((0.055, (None, 0.035, 0.025, 0.015)), (0.07, (None, 0.025))):
        for pinch in pinches:
            for name, blockers in _BLOCKER_SETS:
                extra = ((0.15, 0.3, 0.04),) if name == "one-plus-free" else ()
                key = f"corridor-w{hw:g}-{'open' if pinch is None else f'pinch{pinch:g}'}-{name}"
                out[key] = corridor_scene(blockers, hw, pinch, extra=extra)
    out["corridor-sealed-one"] = corridor_scene(((0.0, 0.25, 0.04),), sealed=True)
    for seed in range(6):
        out[f"random-k4-seed{seed}"] = generate_scene(4, seed)
    return out


def regression_queries(scenes: dict[str, WorkspaceConfig] | None = None) -> list[tuple[str, MotionQuery]]:
    """Approach and carry queries for every object of every regression scene.

    Approaches start at the entry pose. A carry query is only emitted when the grid
    planner found the approach, and starts where that approach ended.
    """
    scenes = regression_scenes() if scenes is None else scenes
    grid = MotionPlannerHandle("grid")
    out = []
    for name, scene in scenes.items():
        cache = GridCache()
        for obj in scene.objects:
            removal = plan_removal(scene, obj.id, grid, cache=cache)
            out.append((f"{name}/approach-{obj.id}",
                        MotionQuery(tuple(scene.gripper.position), grasp_region(obj, scene), scene)))
            if removal is None:
                continue
            approach = removal.approach
            held = snapshot(scene)
            grip = tuple(float(v) for v in approach.end)
            off = grasp_offset(obj, grip)
            held.object(obj.id).held = True
            held.gripper.position, held.gripper.holding, held.gripper.grasp_offset = grip, obj.id, off
            end = removal.transport.end
            out.append((f"{name}/carry-{obj.id}",
                        MotionQuery(grip, GoalRegion((float(end[0]), float(end[1]))), held, obj.id, off)))
    return out
