import math

import numpy as np
import pytest

from tmp_idan.geometry import GoalRegion, ObjectState, empty_scene, generate_scene
from tmp_idan.motion import MotionPlan, MotionPlannerHandle, MotionQuery, PlannerStats, path_validate, plan
from tmp_idan.scenes import regression_queries, regression_scenes


def open_scene():
    s = empty_scene()
    s.objects = [ObjectState(0, (0.9, 0.5), 0.03)]
    s.target_id = 0
    return s


def wall_scene():
    # touching discs spanning the full width of the bounds at y = 0.3
    s = empty_scene()
    r = 0.025
    n = int(round(1.0 / (2 * r)))
    s.objects = [ObjectState(i, (r + 2 * r * i, 0.3), r) for i in range(n)]
    s.target_id = 0
    return s


def test_handle_validation_and_aliases():
    assert MotionPlannerHandle("grid-bfs").kind == "grid"
    for bad in ({"kind": "prm"}, {"time_budget": 0}, {"step": -1}, {"goal_bias": 1.5}, {"resolution": 0}):
        with pytest.raises(ValueError):
            MotionPlannerHandle(**bad)
    h = MotionPlannerHandle().scaled(10)
    assert h.time_budget == 10.0 and h.kind == "rrt"


def test_grid_straight_corridor_within_sqrt2_of_euclidean(grid):
    s = open_scene()
    q = MotionQuery((0.2, 0.2), GoalRegion((0.6, 0.45)), s)
    p = plan(q, grid)
    assert p is not None and path_validate(p, s, q.goal, q.start)
    assert p.length <= math.sqrt(2) * math.dist((0.2, 0.2), (0.6, 0.45)) + 1e-9


def test_grid_wall_of_touching_discs_is_infeasible(grid):
    s = wall_scene()
    assert plan(MotionQuery((0.5, 0.1), GoalRegion((0.5, 0.5)), s), grid) is None


def test_rrt_also_fails_behind_wall():
    s = wall_scene()
    h = MotionPlannerHandle("rrt", time_budget=0.2)
    assert plan(MotionQuery((0.5, 0.1), GoalRegion((0.5, 0.5)), s), h, np.random.default_rng(0)) is None


def test_rrt_free_corridor_hundred_seeds():
    s = open_scene()
    q = MotionQuery((0.2, 0.2), GoalRegion((0.6, 0.45), 0.0, 0.005), s)
    h = MotionPlannerHandle("rrt", time_budget=1.0)
    for seed in range(100):
        p = plan(q, h, np.random.default_rng(seed))
        assert p is not None and path_validate(p, s, q.goal, q.start)


def test_grid_is_deterministic(grid):
    s = generate_scene(30, 2)
    q = MotionQuery(s.gripper.position, GoalRegion((0.5, 0.58)), s)
    a, b = plan(q, grid), plan(q, grid)
    if a is None:
        assert b is None
    else:
        assert np.array_equal(a.waypoints, b.waypoints)


def test_rrt_seeded_reproducible():
    s = generate_scene(15, 4)
    q = MotionQuery(s.gripper.position, GoalRegion((0.1, 0.55), 0.0, 0.005), s)
    h = MotionPlannerHandle("rrt", max_iterations=20_000, time_budget=30.0)
    a = plan(q, h, np.random.default_rng(7))
    b = plan(q, h, np.random.default_rng(7))
    assert (a is None) == (b is None)
    if a is not None:
        assert np.array_equal(a.waypoints, b.waypoints)


def test_start_in_collision_raises(grid):
    s = open_scene()
    with pytest.raises(ValueError):
        plan(MotionQuery((0.9, 0.5), GoalRegion((0.2, 0.2)), s), grid)


def test_already_at_goal_returns_single_point(grid):
    s = open_scene()
    p = plan(MotionQuery((0.2, 0.2), GoalRegion((0.2, 0.2)), s), grid)
    assert len(p.waypoints) == 1


def test_path_validate_catches_obstacle_crossing():
    s = open_scene()
    bad = MotionPlan([(0.8, 0.5), (1.0 - 0.03, 0.5)])  # passes through object 0
    assert not path_validate(bad, s)
    good = MotionPlan([(0.2, 0.2), (0.3, 0.2)])
    assert path_validate(good, s)
    assert not path_validate(good, s, start=(0.2, 0.21))
    assert not path_validate(good, s, goal=GoalRegion((0.5, 0.5)))


def test_plan_round_trip_and_arc_length():
    p = MotionPlan([(0.0, 0.0), (0.3, 0.0), (0.3, 0.4)], None, None)
    q = MotionPlan.from_dict(p.to_dict())
    assert np.array_equal(p.waypoints, q.waypoints)
    assert p.length == pytest.approx(0.7)
    assert p.at(0.0) == pytest.approx([0.0, 0.0])
    assert p.at(0.5) == pytest.approx([0.3, 0.05])
    assert p.at(1.0) == pytest.approx([0.3, 0.4])


def test_stats_are_accumulated(grid):
    s = open_scene()
    st = PlannerStats()
    plan(MotionQuery((0.2, 0.2), GoalRegion((0.6, 0.45)), s), grid, stats=st)
    plan(MotionQuery((0.2, 0.2), GoalRegion((0.9, 0.5)), s), grid, stats=st)  # goal inside an object
    assert st.queries == 2 and st.found == 1 and st.collision_checks > 0


def test_every_grid_regression_plan_validates(grid):
    scenes = dict(list(regression_scenes().items())[:12])
    for name, q in regression_queries(scenes):
        p = plan(q, grid)
        if p is not None:
            assert path_validate(p, q.scene, q.goal, q.start), name
