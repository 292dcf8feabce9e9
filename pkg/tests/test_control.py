import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import Polygon

from leapdrive.control import (
    FrenetState, ObstaclePrediction, PathError, PidState, PlannerConfig, PlanningError, VehicleController,
    densify, frenet_project, frenet_to_world, lookahead_index, lookahead_select, pid_step, plan, quintic_solve,
    target_state, trajectory_cost,
)
from leapdrive.control.tracking import longitudinal_command
from leapdrive.sim import load_scenario, straight_road
from leapdrive.sim.geometry import rect_corners

R = 30.0


def arc_scenario():
    doc = straight_road()
    doc["lanes"] = [{"id": "A", "arc": {"center": [0.0, 0.0], "radius": R, "start_angle": 0.0,
                                        "end_angle": math.pi / 2}}]
    doc["ego"] = {"lane": "A", "s": 0.0}
    doc["route"] = [[R, 0.0], [0.0, R]]
    return load_scenario(doc)


def straight_path(lanes=1, length=300.0):
    scn = load_scenario(straight_road(length=length, route_length=length - 50, lanes=lanes))
    return densify(scn.route, scn.lanes)


# --- densify ----------------------------------------------------------------

def test_ten_metre_straight_has_eleven_points():
    scn = load_scenario(straight_road())
    path = densify([[0.0, 0.0], [10.0, 0.0]], scn.lanes)
    assert len(path) == 11
    assert np.allclose(np.diff(path.s), 1.0)


def test_arc_spacing_by_arc_length():
    scn = arc_scenario()
    path = densify(scn.route, scn.lanes)
    angles = np.unwrap(np.arctan2(path.points[:, 1], path.points[:, 0]))
    arc_len = R * np.diff(angles)
    assert np.all((arc_len >= 0.9) & (arc_len <= 1.1))
    assert np.all(np.diff(path.s) > 0)


def test_single_waypoint_rejected():
    scn = load_scenario(straight_road())
    with pytest.raises(PathError):
        densify([[0.0, 0.0]], scn.lanes)


def test_off_lane_waypoint_rejected():
    scn = load_scenario(straight_road())
    with pytest.raises(PathError, match="waypoint 1"):
        densify([[0.0, 0.0], [10.0, 30.0]], scn.lanes)


def test_adjacent_lane_metadata():
    path = straight_path(lanes=2)
    assert path.has_adjacent(5.0, "left")
    assert not path.has_adjacent(5.0, "right")


def test_densify_follows_successors():
    doc = straight_road()
    doc["lanes"] = [
        {"id": "A", "line": {"start": [0, 0], "end": [30, 0]}, "successors": ["B"]},
        {"id": "B", "arc": {"center": [30, 20], "radius": 20, "start_angle": -math.pi / 2, "end_angle": 0.0}},
    ]
    doc["ego"] = {"lane": "A", "s": 0.0}
    doc["route"] = [[0, 0], [50, 20]]
    scn = load_scenario(doc)
    path = densify(scn.route, scn.lanes)
    gaps = np.diff(path.s)
    assert gaps.min() >= 0.5 and gaps.max() <= 1.5
    assert path.lane_ids[0] == "A" and path.lane_ids[-1] == "B"


# --- frenet -----------------------------------------------------------------

def test_on_path_has_zero_offset():
    path = straight_path()
    assert abs(frenet_project(path, 12.3, 0.0).d) < 1e-9


def test_left_is_positive():
    path = straight_path()
    assert frenet_project(path, 20.0, 1.0).d == pytest.approx(1.0)


def test_far_pose_rejected():
    with pytest.raises(PathError):
        frenet_project(straight_path(), 20.0, 20.0)


@pytest.mark.parametrize("which", ["straight", "arc"])
def test_frenet_roundtrip(which, rng):
    if which == "straight":
        path = straight_path()
    else:
        scn = arc_scenario()
        path = densify(scn.route, scn.lanes)
    for _ in range(100):
        s = rng.uniform(2.0, path.length - 2.0)
        d = rng.uniform(-3.5, 3.5)
        xy = frenet_to_world(path, [s], [d])[0]
        st_ = frenet_project(path, *xy)
        back = frenet_to_world(path, [st_.s], [st_.d])[0]
        assert np.linalg.norm(back - xy) < 0.01


# --- quintic ------------------------------------------------------------------

def oracle_coeffs(x0, v0, a0, xT, vT, aT, T):
    A = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, T, T**2, T**3, T**4, T**5],
        [0, 1, 2 * T, 3 * T**2, 4 * T**3, 5 * T**4],
        [0, 0, 2, 6 * T, 12 * T**2, 20 * T**3],
    ], dtype=float)
    return np.linalg.solve(A, [x0, v0, a0, xT, vT, aT])


def test_constant_solution():
    p = quintic_solve(3.0, 0.0, 0.0, 3.0, 0.0, 0.0, 2.0)
    assert p.coeffs[0] == 3.0
    assert np.allclose(p.coeffs[1:], 0.0, atol=1e-15)


def test_minimum_jerk_rest_to_rest():
    p = quintic_solve(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0)
    assert np.allclose(p.coeffs, oracle_coeffs(0, 0, 0, 1, 0, 0, 1.0), atol=1e-12)
    assert np.allclose(p.coeffs[3:], [10.0, -15.0, 6.0], atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-20, 20)] * 6), st.floats(0.2, 8.0))
def test_boundary_conditions(bc, T):
    p = quintic_solve(*bc, T)
    got = [p(0.0), p(0.0, 1), p(0.0, 2), p(T), p(T, 1), p(T, 2)]
    scale = max(1.0, max(abs(b) for b in bc))
    assert np.allclose(got, bc, rtol=0, atol=1e-9 * scale)


def test_nonpositive_duration():
    with pytest.raises(ValueError):
        quintic_solve(0, 0, 0, 1, 0, 0, 0.0)


# --- targets ---------------------------------------------------------------------

def test_stop_target_zero_speed():
    (tg,) = target_state("STOP", FrenetState(s=0.0, s_d=8.0), straight_path(), 3.5)
    assert tg.s_d == 0.0


def test_accelerate_target_kinematics():
    (tg,) = target_state("AC", FrenetState(s=0.0, s_d=5.0), straight_path(), 3.5, current_accel=0.0)
    assert tg.s_d == pytest.approx(10.0)
    assert tg.s == pytest.approx(37.5)


def test_accelerate_respects_speed_cap():
    cfg = PlannerConfig(max_speed=8.0)
    (tg,) = target_state("AC", FrenetState(s=0.0, s_d=5.0), straight_path(), 3.5, cfg, current_accel=0.0)
    assert tg.s_d == pytest.approx(8.0)


def test_lane_change_grid():
    tgs = target_state("LCL", FrenetState(s=10.0, s_d=6.0), straight_path(lanes=2), 3.5)
    assert len(tgs) == 9
    assert all(t.d == 3.5 for t in tgs)
    assert len({(t.s, t.s_d) for t in tgs}) == 9


def test_lane_change_without_lane_raises():
    with pytest.raises(PlanningError):
        target_state("LCR", FrenetState(s=10.0, s_d=6.0), straight_path(lanes=2), 3.5)


def test_unknown_meta_raises():
    with pytest.raises(PlanningError):
        target_state("JUMP", FrenetState(s=0.0), straight_path(), 3.5)


# --- cost and plan ------------------------------------------------------------------

def test_hold_candidate_is_cheapest():
    path = straight_path(lanes=2)
    ego = FrenetState(s=10.0, s_d=8.0)
    costs = {}
    for meta in ("IDLE", "AC", "DC", "LCL"):
        res = plan(meta, ego, path, target_speed=8.0)
        costs[meta] = min(c.cost for c in res.candidates)
    assert costs["IDLE"] == min(costs.values())
    assert costs["IDLE"] == pytest.approx(0.0, abs=1e-9)


def test_static_obstacle_is_infeasible():
    path = straight_path()
    traj = plan("IDLE", FrenetState(s=10.0, s_d=8.0), path).trajectory
    block = ObstaclePrediction("wall", 30.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0)
    assert trajectory_cost(traj, 8.0, [block]) == math.inf


def test_jerk_weight_is_linear():
    path = straight_path(lanes=2)
    traj = plan("LCL", FrenetState(s=10.0, s_d=6.0), path).trajectory
    c0 = trajectory_cost(traj, 6.0, config=PlannerConfig(w_jerk=0.0))
    c1 = trajectory_cost(traj, 6.0, config=PlannerConfig(w_jerk=0.1))
    c2 = trajectory_cost(traj, 6.0, config=PlannerConfig(w_jerk=0.2))
    assert c1 - c0 > 0
    assert c2 - c0 == pytest.approx(2 * (c1 - c0), rel=1e-12)


def test_idle_holds_speed():
    traj = plan("IDLE", FrenetState(s=5.0, s_d=9.0), straight_path()).trajectory
    assert np.max(np.abs(traj.speed - 9.0)) < 0.1
    assert len(traj) == 101
    assert traj.t[-1] == pytest.approx(5.0)


def test_stop_monotone_to_zero():
    traj = plan("STOP", FrenetState(s=5.0, s_d=8.0), straight_path()).trajectory
    assert traj.speed[-1] == pytest.approx(0.0, abs=1e-9)
    assert np.all(np.diff(traj.speed) <= 1e-9)


def test_stop_before_line():
    traj = plan("STOP", FrenetState(s=5.0, s_d=8.0), straight_path(), stop_distance=12.0).trajectory
    assert traj.s[-1] == pytest.approx(17.0, abs=1e-6)
    assert np.all(np.diff(traj.speed) <= 1e-9)


def _swept_overlap(traj, obstacles, cfg):
    """Independent check: shapely polygons along a 4x densified trajectory."""
    t = np.linspace(traj.t[0], traj.t[-1], 4 * (len(traj.t) - 1) + 1)
    x = np.interp(t, traj.t, traj.x)
    y = np.interp(t, traj.t, traj.y)
    h = np.interp(t, traj.t, np.unwrap(traj.heading))
    for ob in obstacles:
        fps = ob.footprints(t)
        for i in range(len(t)):
            ego = Polygon(rect_corners(x[i], y[i], h[i], cfg.ego_half_length, cfg.ego_half_width))
            if ego.intersects(Polygon(rect_corners(*fps[i]))):
                return True
    return False


@pytest.mark.parametrize("gap", [0.0, 8.0, 20.0])
def test_blocked_left_lane_never_collides(gap):
    path = straight_path(lanes=2)
    cfg = PlannerConfig()
    obstacles = [ObstaclePrediction("side", 10.0 + gap, 3.5, 0.0, 6.0, 0.0, 2.25, 0.95)]
    res = plan("LCL", FrenetState(s=10.0, s_d=6.0), path, obstacles=obstacles, config=cfg)
    if res.trajectory.emergency:
        return
    assert math.isfinite(res.trajectory.cost)
    assert not _swept_overlap(res.trajectory, obstacles, cfg)


def test_all_infeasible_gives_emergency():
    path = straight_path()
    obstacles = [ObstaclePrediction("wall", 14.0, 0.0, 0.0, 0.0, 0.0, 1.0, 5.0)]
    res = plan("IDLE", FrenetState(s=5.0, s_d=10.0), path, obstacles=obstacles)
    assert res.trajectory.emergency
    assert res.trajectory.speed[-1] == 0.0
    assert res.debug_record()["emergency"] is True


def test_ties_pick_lowest_index():
    path = straight_path(lanes=2)
    cfg = PlannerConfig(advance_factors=(1.0, 1.0), speed_factors=(1.0,))
    res = plan("LCL", FrenetState(s=10.0, s_d=6.0), path, config=cfg)
    assert res.candidates[0].cost == res.candidates[1].cost
    assert res.trajectory.candidate == 0


# --- tracking ----------------------------------------------------------------------

def test_lookahead_examples():
    assert lookahead_index(1.0) == 20
    assert lookahead_index(10.0) == 4
    assert lookahead_index(0.0) == 20
    speeds = np.linspace(0, 30, 301)
    idx = [lookahead_index(v) for v in speeds]
    assert all(a >= b for a, b in zip(idx, idx[1:]))


def test_lookahead_select_offset():
    traj = plan("IDLE", FrenetState(s=0.0, s_d=10.0), straight_path()).trajectory
    v, p = lookahead_select(traj, 10.0, offset=6)
    assert p[0] == pytest.approx(traj.x[10])
    v, p = lookahead_select(traj, 10.0, offset=500)
    assert p[0] == pytest.approx(traj.x[-1])


def test_pid_zero():
    assert pid_step(PidState(1.95, 0.05, 0.2), 0.0, 0.05) == 0.0


def test_pid_proportional_only():
    assert pid_step(PidState(1.95, 0.0, 0.0), 0.5, 0.05) == pytest.approx(0.975)


def test_pid_hand_evaluation():
    st_ = PidState(1.95, 0.05, 0.2)
    pid_step(st_, 0.1, 0.05)
    out = pid_step(st_, 0.1, 0.05)
    expected = 1.95 * 0.1 + 0.05 * (0.1 + 0.1) * 0.05 + 0.2 * 0.0
    assert abs(out - expected) < 1e-12


def test_pid_buffer_is_bounded():
    st_ = PidState(0.0, 1.0, 0.0)
    for _ in range(25):
        out = pid_step(st_, 1.0, 0.1)
    assert len(st_.buffer) == 10
    assert out == pytest.approx(1.0)


def test_actuator_split():
    assert longitudinal_command(0.4) == (0.4, 0.0)
    assert longitudinal_command(-2.0) == (0.0, 1.0)


def test_controller_steers_toward_target():
    from leapdrive.sim import VehicleState

    ctl = VehicleController()
    c = ctl.control(VehicleState(0, 0, 0, speed=5.0), 5.0, np.array([10.0, 2.0]), 0.05)
    assert c.steer > 0
