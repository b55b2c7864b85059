import math

import numpy as np
import pytest

from tmp_idan.andor import (
    ActionTemplate,
    GraphStatus,
    Selector,
    TEMPLATE_SIZE,
    Verb,
    build_clutter_graph,
)
from tmp_idan.geometry import (
    FailureModel,
    ObjectState,
    SceneError,
    Simulator,
    empty_scene,
    generate_scene,
    grasp_region,
)
from tmp_idan.network import (
    GraphNetwork,
    MotionOutcome,
    NetworkError,
    NetworkStatus,
    ObjectCostWeights,
    TransitionReason,
    dispatch_action,
    grow_next_graph,
    select_optimal_state,
    solve,
)
from tmp_idan.scenes import corridor_scene, lone_target_scene, walled_scene


def scene_with(objects, target=0):
    s = empty_scene()
    s.objects = [ObjectState(i, c, r) for i, (c, r) in enumerate(objects)]
    s.target_id = target
    s.validate()
    return s


def blocker_candidates():
    g = build_clutter_graph()
    return [c for c in g.next_feasible_states() if c.action == ActionTemplate(Verb.APPROACH, Selector.BLOCKER)]


# -- solve ---------------------------------------------------------------------

def test_lone_target_solved_at_depth_one(grid):
    r = solve(lone_target_scene(), planner=grid, limit=5)
    assert (r.log.outcome, r.log.depth, r.log.objects_rearranged) == ("solved", 1, 0)


def test_corridor_needs_one_rearrangement(grid):
    r = solve(corridor_scene(), planner=grid, limit=5)
    assert (r.log.outcome, r.log.depth, r.log.objects_rearranged) == ("solved", 2, 1)
    assert r.rearranged_ids() == [1]
    assert [t.reason for t in r.network.transitions] == [TransitionReason.GRAPH_FAILED]


def test_walled_target_exhausts_at_limit(grid):
    r = solve(walled_scene(), planner=grid, limit=3)
    assert (r.log.outcome, r.log.depth) == ("exhausted", 3)
    assert r.network.status is NetworkStatus.EXHAUSTED
    assert len(r.network.transitions) == 2


def test_solve_rejects_bad_input(grid):
    with pytest.raises(ValueError):
        solve(lone_target_scene(), planner=grid, limit=0)
    bad = lone_target_scene()
    bad.objects.append(ObjectState(1, (0.5, 0.3), 0.03))
    with pytest.raises(SceneError):
        solve(bad, planner=grid)


@pytest.mark.parametrize("count,seed", [(30, 0), (49, 1), (64, 2)])
def test_network_invariants(grid, count, seed):
    scene = generate_scene(count, seed)
    r = solve(scene, planner=grid, rng_seed=seed, p_fail=0.2)
    net, log = r.network, r.log
    assert log.depth == len(net.graphs) <= net.depth_limit
    assert len(net.transitions) == len(net.graphs) - 1
    solved = [g.status is GraphStatus.SOLVED for g in net.graphs]
    assert (net.status is NetworkStatus.SOLVED) == solved[-1]
    assert not any(solved[:-1])
    assert log.expansions <= TEMPLATE_SIZE * log.depth
    assert log.objects_rearranged <= log.depth
    assert log.motion_planning_attempts >= log.motion_executions
    for t in net.transitions:
        before, after = net.graphs[t.source].snapshot, net.graphs[t.dest].snapshot
        moved = [o.id for o, p in zip(after.objects, before.objects) if o.center != p.center]
        if t.reason is TransitionReason.GRAPH_FAILED:
            assert len(moved) == 1 and after.object(moved[0]).in_storage
        else:
            assert moved == [] and t.snapshot_delta == []
    assert len(scene.objects) == len(r.final_scene.objects)
    assert len(r.final_scene.stored()) == log.objects_rearranged


def test_grid_solve_is_deterministic(grid):
    scene = generate_scene(49, 5)
    a = solve(scene, planner=grid, rng_seed=3)
    b = solve(scene, planner=grid, rng_seed=3)
    assert a.log.to_dict(timings=False) == b.log.to_dict(timings=False)
    assert [x.to_dict() for x in a.trace] == [x.to_dict() for x in b.trace]


def test_action_trace_chains(grid):
    r = solve(generate_scene(64, 0), planner=grid, p_fail=0.2)
    for prev, nxt in zip(r.trace, r.trace[1:]):
        assert math.dist(prev.plan.end, nxt.plan.start) <= 1e-9
    assert r.trace[-1].verb == "place-target"


# -- grow_next_graph -------------------------------------------------------------

def test_grow_after_failed_graph_reflects_moved_object():
    scene = corridor_scene()
    net = GraphNetwork(5)
    net.start(scene)
    moved = scene.object(1)
    moved.center, moved.in_storage = (0.1, -1.1), True
    g = grow_next_graph(net, TransitionReason.GRAPH_FAILED, scene)
    assert g.snapshot.object(1).in_storage
    t = net.transitions[0]
    assert t.reason is TransitionReason.GRAPH_FAILED and [d[0] for d in t.snapshot_delta] == [1]


def test_grow_after_execution_failure_keeps_snapshot():
    scene = corridor_scene()
    net = GraphNetwork(5)
    first = net.start(scene)
    g = grow_next_graph(net, TransitionReason.EXECUTION_RETRY, scene)
    assert g.snapshot == first.snapshot
    assert net.transitions[0].to_dict()["snapshot_delta"] == "none"


def test_grow_after_solved_or_past_limit_raises():
    scene = lone_target_scene()
    net = GraphNetwork(1)
    net.start(scene)
    with pytest.raises(NetworkError):
        grow_next_graph(net, TransitionReason.NO_FEASIBLE_STATE, scene)
    net = GraphNetwork(3)
    g = net.start(scene)
    for node, arc in ((2, 0), (1, 1), (3, 3), (4, 4)):
        g.mark_achieved(node, arc)
    net.refresh_status()
    with pytest.raises(NetworkError):
        grow_next_graph(net, TransitionReason.GRAPH_FAILED, scene)


# -- select_optimal_state ---------------------------------------------------------

def test_selection_prefers_smaller_blocker_when_only_size_counts():
    s = scene_with([((0.5, 0.5), 0.03), ((0.3, 0.3), 0.01), ((0.7, 0.3), 0.02)])
    sel = select_optimal_state(blocker_candidates(), s, ObjectCostWeights(0, 0, 1, 0))
    assert sel.object == 1


def test_selection_breaks_mirror_ties_by_lowest_id():
    s = scene_with([((0.5, 0.5), 0.03), ((0.7, 0.3), 0.02), ((0.3, 0.3), 0.02)])
    for w in (ObjectCostWeights(), ObjectCostWeights(1, 1, 1, 1), ObjectCostWeights(0, 0, 1, 0)):
        assert select_optimal_state(blocker_candidates(), s, w).object == 1


def test_selection_matches_brute_force_with_unit_weights():
    s = scene_with([((0.5, 0.5), 0.03), ((0.2, 0.2), 0.04), ((0.6, 0.25), 0.02), ((0.85, 0.45), 0.05)])
    s.gripper.position = (0.3, -0.05)
    home, grip, target = s.entry, s.gripper.position, s.target.center
    costs = {o.id: math.dist(o.center, home) + math.dist(o.center, grip) + o.radius + math.dist(o.center, target)
             for o in s.objects if o.id != 0}
    best = min(costs, key=lambda i: (costs[i], i))
    sel = select_optimal_state(blocker_candidates(), s, ObjectCostWeights(1, 1, 1, 1))
    assert sel.object == best
    assert sel.cost == pytest.approx(1.0 + costs[best])


def test_selection_full_candidate_list_prefers_free_noop_and_target():
    s = scene_with([((0.5, 0.5), 0.03), ((0.2, 0.2), 0.04)])
    g = build_clutter_graph()
    sel = select_optimal_state(g.next_feasible_states(), s, ObjectCostWeights())
    assert (sel.arc, sel.object, sel.cost) == (0, 0, 0.0)


def test_selection_errors_and_exhaustion():
    s = scene_with([((0.5, 0.5), 0.03), ((0.2, 0.2), 0.04)])
    with pytest.raises(ValueError):
        select_optimal_state([], s, ObjectCostWeights())
    assert select_optimal_state(blocker_candidates(), s, ObjectCostWeights(), excluded={1}) is None


def test_weights_validation():
    with pytest.raises(ValueError):
        ObjectCostWeights(0, 0, 0, 0)
    with pytest.raises(ValueError):
        ObjectCostWeights(-1, 1, 0, 0)


# -- dispatch_action ----------------------------------------------------------------

def test_dispatch_pick_in_empty_scene(grid):
    s = lone_target_scene()
    sim = Simulator(s)
    start = s.gripper.position
    res = dispatch_action(ActionTemplate(Verb.PICK), 0, sim, grid)
    assert res.outcome is MotionOutcome.OK
    p = res.plans[0]
    assert math.dist(p.start, start) <= 1e-9
    assert grasp_region(s.object(0), s).contains(p.end)
    assert sim.scene.gripper.holding == 0


def test_dispatch_pick_enclosed_target_not_found(grid):
    r = 0.03
    ring = [((0.5 + 2 * r * math.cos(k * math.pi / 3), 0.3 + 2 * r * math.sin(k * math.pi / 3)), r)
            for k in range(6)]
    s = scene_with([((0.5, 0.3), r)] + ring)
    res = dispatch_action(ActionTemplate(Verb.PICK), 0, Simulator(s), grid)
    assert res.outcome is MotionOutcome.PLAN_NOT_FOUND


def test_dispatch_pick_with_certain_failure(grid):
    s = scene_with([((0.5, 0.5), 0.03), ((0.2, 0.2), 0.04)])
    sim = Simulator(s, FailureModel(1.0), np.random.default_rng(0))
    res = dispatch_action(ActionTemplate(Verb.PICK, Selector.BLOCKER), 1, sim, grid)
    assert res.outcome is MotionOutcome.EXECUTION_FAILED
    assert not sim.scene.object(1).held


def test_dispatch_unknown_object(grid):
    with pytest.raises(KeyError):
        dispatch_action(ActionTemplate(Verb.PICK), 7, Simulator(lone_target_scene()), grid)
