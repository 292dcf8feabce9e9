import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import LineString, Point, Polygon

from leapdrive.sim import (
    Control, LaneGraphError, ScenarioError, VehicleState, World, detect_accident, load_scenario,
    rect_separation, rects_overlap, route_progress, step_vehicle, straight_road, wrap_angle,
)
from leapdrive.sim.geometry import point_to_polyline_distance, rect_corners
from leapdrive.sim.lanes import Lane, LaneGraph, line_points


def minimal_doc():
    return {
        "schema_version": 1,
        "lanes": [{"id": "A", "line": {"start": [0, 0], "end": [50, 0]}}],
        "ego": {"lane": "A", "s": 0.0},
        "route": [[0, 0], [50, 0]],
    }


# --- scenario loading -----------------------------------------------------

def test_minimal_document_has_one_lane_no_agents():
    scn = load_scenario(minimal_doc())
    assert len(scn.lanes) == 1
    assert scn.agents == ()


def test_route_waypoint_off_lane_is_named():
    doc = minimal_doc()
    doc["route"].append([25.0, 40.0])
    with pytest.raises(ScenarioError) as exc:
        load_scenario(doc)
    assert exc.value.path == "$.route[2]"
    assert "waypoint 2" in str(exc.value)


def test_schema_error_carries_field_path():
    doc = minimal_doc()
    doc["lanes"][0]["width"] = 1.0
    with pytest.raises(ScenarioError) as exc:
        load_scenario(doc)
    assert exc.value.path.startswith("$.lanes[0]")


def test_unknown_lane_reference():
    doc = minimal_doc()
    doc["ego"]["lane"] = "Z"
    with pytest.raises(ScenarioError, match=r"\$\.ego\.lane"):
        load_scenario(doc)


def test_same_file_loads_identically(tmp_path):
    import json

    path = tmp_path / "s.json"
    path.write_text(json.dumps(straight_road(lanes=2)))
    a, b = load_scenario(path), load_scenario(str(path))
    assert a.canonical() == b.canonical()
    for la, lb in zip(a.lanes, b.lanes):
        assert la.points.tobytes() == lb.points.tobytes()


def test_invalid_json_string():
    with pytest.raises(ScenarioError):
        load_scenario("{not json")


def test_adjacency_must_be_symmetric():
    a = Lane("A", line_points([0, 0], [10, 0]), left="B")
    b = Lane("B", line_points([0, 3.5], [10, 3.5]))
    with pytest.raises(LaneGraphError, match="does not list"):
        LaneGraph({"A": a, "B": b})


def test_centreline_spacing_limit():
    with pytest.raises(LaneGraphError, match="spacing"):
        LaneGraph({"A": Lane("A", np.array([[0.0, 0.0], [10.0, 0.0]]))})


def test_light_schedule_cycles():
    doc = straight_road()
    doc["traffic_lights"] = [{"id": "T", "lane": "L0", "stop_s": 50, "schedule": [["red", 2], ["green", 3]],
                              "offset": 0}]
    light = load_scenario(doc).lights[0]
    assert [light.phase_at(t) for t in (0.0, 1.9, 2.0, 4.9, 5.0)] == ["red", "red", "green", "green", "red"]


def test_light_offset_seeded():
    doc = straight_road()
    doc["traffic_lights"] = [{"id": "T", "lane": "L0", "stop_s": 50, "schedule": [["red", 2], ["green", 3]]}]
    assert load_scenario(doc).lights[0].offset == load_scenario(doc).lights[0].offset


# --- vehicle --------------------------------------------------------------

def test_rest_stays_at_rest():
    s = VehicleState(1.0, 2.0, 0.3)
    t = step_vehicle(s, Control(), 0.05)
    assert (t.x, t.y, t.heading, t.speed) == (1.0, 2.0, 0.3, 0.0)


def test_straight_line_advance():
    t = step_vehicle(VehicleState(0.0, 0.0, 0.0, speed=10.0), Control(), 0.1)
    t = step_vehicle(t, Control(), 0.1)
    t = step_vehicle(t, Control(), 0.1)
    t = step_vehicle(t, Control(), 0.1)
    t = step_vehicle(t, Control(), 0.1)
    assert t.x == pytest.approx(5.0, abs=1e-12)
    assert t.y == 0.0


def test_dt_above_limit_rejected():
    with pytest.raises(ValueError):
        step_vehicle(VehicleState(0, 0, 0, speed=10.0), Control(), 0.5)


def test_heading_rate_matches_fine_integration():
    steer = 0.3
    delta = steer * 0.6

    def integrate(n):
        s = VehicleState(0.0, 0.0, 0.0, speed=8.0)
        for _ in range(n):
            s = step_vehicle(s, Control(steer=steer), 1.0 / n)
        return s.heading

    coarse, fine = integrate(100), integrate(10_000)
    assert abs(coarse - fine) < 1e-3
    assert abs(coarse - 8.0 * math.tan(delta) / 2.7) < 1e-3


def test_controls_are_clamped():
    s = step_vehicle(VehicleState(0, 0, 0, speed=5.0), Control(throttle=5.0, steer=-3.0), 0.1)
    assert s.speed == pytest.approx(5.3)
    assert s.steering == pytest.approx(-0.6)


@settings(max_examples=60, deadline=None)
@given(v=st.floats(0, 30), brake=st.floats(0.01, 1), steer=st.floats(-1, 1), n=st.integers(1, 40))
def test_braking_never_speeds_up(v, brake, steer, n):
    s = VehicleState(0, 0, 0, speed=v)
    for _ in range(n):
        t = step_vehicle(s, Control(brake=brake, steer=steer), 0.05)
        assert 0.0 <= t.speed <= s.speed
        assert all(math.isfinite(c) for c in t.footprint)
        s = t


def test_invalid_state_rejected():
    with pytest.raises(ValueError):
        VehicleState(0, 0, 0, speed=-1.0)
    with pytest.raises(ValueError):
        VehicleState(0, 0, 0, steering=1.0)


# --- geometry -------------------------------------------------------------

def test_wrap_angle_range():
    for a in np.linspace(-20, 20, 101):
        w = wrap_angle(a)
        assert -math.pi <= w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-5, 5)] * 2, st.floats(-3.2, 3.2), st.floats(0.2, 3), st.floats(0.2, 3)),
       st.tuples(*[st.floats(-5, 5)] * 2, st.floats(-3.2, 3.2), st.floats(0.2, 3), st.floats(0.2, 3)))
def test_overlap_agrees_with_shapely(a, b):
    pa, pb = Polygon(rect_corners(*a)), Polygon(rect_corners(*b))
    sep = float(rect_separation(np.array([a]), np.array([b]))[0])
    if abs(pa.distance(pb)) < 1e-6 and pa.intersection(pb).area < 1e-6:
        return  # touching, either answer is fine
    assert rects_overlap(a, b) == pa.intersects(pb)
    assert (sep < 0) == pa.intersects(pb)


def test_point_polyline_distance_against_shapely(rng):
    pts = np.cumsum(rng.normal(size=(20, 2)), axis=0)
    line = LineString(pts)
    for p in rng.normal(scale=5, size=(50, 2)):
        assert point_to_polyline_distance(pts, p) == pytest.approx(line.distance(Point(p)), abs=1e-9)


# --- accidents and progress -------------------------------------------------

def _world_with_agent(agent):
    doc = straight_road()
    doc["agents"] = [agent]
    return World(load_scenario(doc))


def test_overlap_is_vehicle_collision():
    w = _world_with_agent({"id": "car", "kind": "vehicle", "lane": "L0", "s": 3.0})
    acc = detect_accident(w.snapshot(), w.scenario)
    assert acc.kind == "collision_vehicle"
    assert acc.objects == ("car",)


def test_pedestrian_and_static_kinds():
    for kind, expected in (("pedestrian", "collision_pedestrian"), ("static", "collision_static")):
        w = _world_with_agent({"id": "o", "kind": kind, "lane": "L0", "s": 1.0})
        assert detect_accident(w.snapshot(), w.scenario).kind == expected


def _red_light_world():
    doc = straight_road()
    doc["traffic_lights"] = [{"id": "T", "lane": "L0", "stop_s": 50.0, "schedule": [["red", 100]], "offset": 0}]
    return World(load_scenario(doc))


def test_stopped_before_red_line_is_clean():
    w = _red_light_world()
    # front bumper 2 m short of the line
    w.replace_ego(VehicleState(50.0 - 2.0 - 2.25, 0.0, 0.0))
    w.tick(Control(brake=1.0))
    assert detect_accident(w.snapshot(), w.scenario) is None


def test_crossing_red_line():
    w = _red_light_world()
    w.replace_ego(VehicleState(50.0 - 2.25 - 0.2, 0.0, 0.0, speed=10.0))
    w.tick(Control())
    acc = detect_accident(w.snapshot(), w.scenario)
    assert acc.kind == "red_light_violation"


def test_off_road_one_lane_width_outside():
    w = World(load_scenario(straight_road()))
    # left edge is at y = 1.75; one lane width beyond it
    w.replace_ego(VehicleState(30.0, 1.75 + 3.5, 0.0))
    assert detect_accident(w.snapshot(), w.scenario).kind == "off_road"
    w.replace_ego(VehicleState(30.0, 1.75 + 0.3, 0.0))
    assert detect_accident(w.snapshot(), w.scenario) is None


def test_collision_outranks_off_road():
    w = _world_with_agent({"id": "car", "kind": "vehicle", "lane": "L0", "s": 30.0, "offset": 5.0})
    w.replace_ego(VehicleState(30.0, 5.0, 0.0))
    assert detect_accident(w.snapshot(), w.scenario).kind == "collision_vehicle"


def test_detection_idempotent():
    w = _world_with_agent({"id": "car", "kind": "vehicle", "lane": "L0", "s": 3.0})
    snap = w.snapshot()
    assert detect_accident(snap, w.scenario) == detect_accident(snap, w.scenario)


def test_route_progress_endpoints_and_midpoint():
    route = np.array([[0.0, 0.0], [100.0, 0.0]])
    assert route_progress(route, (0.0, 0.0)) == 0.0
    assert route_progress(route, (100.0, 0.0)) == 1.0
    assert route_progress(route, (50.0, 0.0)) == pytest.approx(0.5, abs=1e-6)
    assert route_progress(route, (50.0, 1.5)) == pytest.approx(0.5, abs=1e-6)


def test_route_progress_max_so_far():
    route = np.array([[0.0, 0.0], [100.0, 0.0]])
    assert route_progress(route, (20.0, 0.0), previous=0.6) == 0.6


def test_world_trace_deterministic():
    doc = straight_road()
    doc["agents"] = [{"id": "car", "kind": "vehicle", "lane": "L0", "s": 40.0, "speed": 5.0,
                      "commands": [{"t": 1.0, "speed": 0.0}]}]

    def trace():
        w = World(load_scenario(doc))
        out = []
        for i in range(60):
            snap = w.tick(Control(throttle=0.5, steer=0.01 * (i % 3)))
            out.append((snap.ego.x, snap.ego.y, snap.ego.heading, snap.agents[0].x))
        return out

    assert trace() == trace()


def test_agent_follows_speed_command():
    w = _world_with_agent({"id": "car", "kind": "vehicle", "lane": "L0", "s": 40.0, "speed": 10.0,
                           "commands": [{"t": 1.0, "speed": 0.0, "accel": 5.0}]})
    for _ in range(100):
        snap = w.tick(Control())
    assert snap.agents[0].speed == 0.0
    # 10 m in the first second, then 10 m braking at 5 m/s^2
    assert snap.agents[0].x == pytest.approx(40.0 + 10.0 + 10.0, abs=0.3)


def test_snapshot_is_immutable(straight):
    snap = World(straight).snapshot()
    with pytest.raises(Exception):
        snap.tick = 3
    with pytest.raises(Exception):
        replace(snap.ego, speed=-1.0)
