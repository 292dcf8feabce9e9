import json
import math

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from leapdrive.chat import ChatClient, ChatError
from leapdrive.perception import (
    CriticalObject, CriticalityRadii, EgoContext, ExternalPerceiver, SceneDescription, build_request,
    criticality_filter, describe_scene, trend_of,
)
from leapdrive.sim import Control, World, load_scenario, straight_road


def window_of(doc, frames=5, ticks_per_frame=10, ego_speed=None, warmup=0):
    if ego_speed is not None:
        doc["ego"]["speed"] = ego_speed
    scn = load_scenario(doc)
    world = World(scn)
    for _ in range(warmup):
        world.tick(Control())
    snaps = [world.snapshot()]
    while len(snaps) < frames:
        for _ in range(ticks_per_frame):
            world.tick(Control())
        snaps.append(world.snapshot())
    return snaps, scn


def obj(ahead, lateral=0.0, relation="same", closing=0.0, category="vehicle", oid="o"):
    return CriticalObject(
        id=oid, category=category, box=(ahead, lateral, 0.0, 4.5, 1.9), lane_relation=relation,
        distance=math.hypot(ahead, lateral), direction="same direction", closing_speed=closing,
        trend=trend_of(closing), reasoning="test",
    )


def test_empty_road_has_no_critical_objects():
    snaps, scn = window_of(straight_road())
    desc = describe_scene(snaps, scenario=scn)
    assert desc.objects == ()
    assert "no critical objects" in desc.summary


def test_lead_vehicle_distance_and_closing_speed():
    doc = straight_road()
    doc["agents"] = [{"id": "lead", "kind": "vehicle", "lane": "L0", "s": 20.0 + (10.0 - 8.0) * 2.0, "speed": 8.0}]
    # 2 s of history at 2 Hz; the gap shrinks 2 m/s, ending at 20 m
    snaps, scn = window_of(doc, ego_speed=10.0)
    desc = describe_scene(snaps, scenario=scn)
    lead = desc.lead()
    assert lead.distance == pytest.approx(20.0, abs=1e-6)
    assert lead.closing_speed == pytest.approx(2.0, abs=0.1)
    assert lead.trend == "approaching"
    assert lead.lane_relation == "same"


@pytest.mark.parametrize("lead_speed", [0.0, 3.0, 12.0])
def test_closing_speed_error_below_tenth(lead_speed):
    doc = straight_road(length=400)
    doc["agents"] = [{"id": "lead", "kind": "vehicle", "lane": "L0", "s": 45.0, "speed": lead_speed}]
    snaps, scn = window_of(doc, ego_speed=7.0)
    lead = describe_scene(snaps, scenario=scn).lead()
    assert abs(lead.closing_speed - (7.0 - lead_speed)) < 0.1


def test_red_light_reasoning_tag():
    doc = straight_road()
    doc["traffic_lights"] = [{"id": "T", "lane": "L0", "stop_s": 35.0, "schedule": [["red", 100]], "offset": 0}]
    snaps, scn = window_of(doc, frames=1)
    desc = describe_scene(snaps, scenario=scn)
    (light,) = desc.objects
    assert light.category == "traffic_light"
    assert light.state == "red"
    assert light.distance == pytest.approx(35.0)
    assert light.reasoning == "must stop at intersection"


def test_far_vehicle_excluded():
    assert criticality_filter([obj(200.0)]) == []


def test_vehicle_behind_receding_excluded():
    assert criticality_filter([obj(-10.0, closing=-3.0)]) == []
    assert criticality_filter([obj(-10.0, lateral=3.5, relation="left", closing=-3.0)]) == []


def test_adjacent_vehicle_closing_from_behind_kept():
    o = obj(-8.0, lateral=3.5, relation="left", closing=2.0)
    assert criticality_filter([o]) == [o]


def test_oncoming_cyclist_included():
    doc = straight_road(lanes=2)
    doc["agents"] = [{"id": "bike", "kind": "cyclist", "path": [[150.0, 3.5], [-50.0, 3.5]],
                      "s": 150.0 - (25.0 + 4.0 * 2.0), "speed": 4.0}]
    snaps, scn = window_of(doc)
    desc = describe_scene(snaps, scenario=scn)
    (bike,) = desc.objects
    assert bike.lane_relation == "oncoming"
    assert bike.distance == pytest.approx(math.hypot(25.0, 3.5), abs=1e-6)
    assert bike.trend == "approaching"


def test_oncoming_beyond_radius_dropped():
    o = obj(45.0, lateral=3.5, relation="oncoming", closing=14.0)
    assert criticality_filter([o]) == []


def test_crossing_pedestrian_radius():
    near = obj(20.0, relation="crossing", category="pedestrian", oid="p1")
    far = obj(35.0, relation="crossing", category="pedestrian", oid="p2")
    assert criticality_filter([near, far]) == [near]


radius = st.floats(1.0, 100.0)


@settings(max_examples=100, deadline=None)
@given(
    objs=st.lists(
        st.tuples(st.floats(-30, 120), st.floats(-10, 10), st.sampled_from(["same", "left", "right", "oncoming", "crossing"]),
                  st.floats(-5, 5), st.sampled_from(["vehicle", "cyclist", "pedestrian", "traffic_light"])),
        max_size=12,
    ),
    radii=st.tuples(radius, radius, radius, radius, radius),
    shrink=st.floats(0.0, 1.0),
)
def test_shrinking_radii_never_adds_objects(objs, radii, shrink):
    items = [obj(a, lat, rel, c, cat, oid=str(i)) for i, (a, lat, rel, c, cat) in enumerate(objs)]
    big = CriticalityRadii(*radii)
    small = big.scaled(shrink)
    kept_small = {o.id for o in criticality_filter(items, small)}
    kept_big = {o.id for o in criticality_filter(items, big)}
    assert kept_small <= kept_big


def test_description_deterministic():
    doc = straight_road(lanes=2)
    doc["agents"] = [
        {"id": "lead", "kind": "vehicle", "lane": "L0", "s": 30.0, "speed": 5.0},
        {"id": "side", "kind": "vehicle", "lane": "L1", "s": 12.0, "speed": 9.0},
    ]
    first = describe_scene(*_pair(window_of(json.loads(json.dumps(doc)), ego_speed=8.0)))
    second = describe_scene(*_pair(window_of(json.loads(json.dumps(doc)), ego_speed=8.0)))
    assert first == second
    assert first.summary == second.summary


def _pair(built):
    snaps, scn = built
    return snaps, "ego", scn


def test_objects_sorted_nearest_first():
    doc = straight_road(lanes=2)
    doc["agents"] = [
        {"id": "far", "kind": "vehicle", "lane": "L0", "s": 40.0, "speed": 0.0},
        {"id": "near", "kind": "vehicle", "lane": "L1", "s": 15.0, "speed": 0.0},
    ]
    snaps, scn = window_of(doc, frames=1)
    assert [o.id for o in describe_scene(snaps, scenario=scn).objects] == ["near", "far"]


def test_unknown_ego_id():
    snaps, scn = window_of(straight_road(), frames=1)
    with pytest.raises(KeyError):
        describe_scene(snaps, ego_id="other", scenario=scn)


def test_trend_must_match_closing_speed():
    with pytest.raises(ValueError):
        CriticalObject("x", "vehicle", (5, 0, 0, 4, 2), "same", 5.0, "same direction", 3.0, "receding", "r")
    assert trend_of(0.1) == "static"
    assert trend_of(-0.5) == "receding"


def test_description_roundtrip():
    doc = straight_road()
    doc["agents"] = [{"id": "lead", "kind": "vehicle", "lane": "L0", "s": 30.0, "speed": 5.0}]
    snaps, scn = window_of(doc, ego_speed=8.0)
    desc = describe_scene(snaps, scenario=scn)
    back = SceneDescription.from_dict(json.loads(json.dumps(desc.to_dict())))
    assert back == desc
    assert back.summary == desc.summary


# --- external seam --------------------------------------------------------

def _client(handler):
    return ChatClient("http://chat.test/v1", api_key="k", transport=httpx.MockTransport(handler))


def test_external_perceiver_roundtrip():
    reply = {"objects": [obj(12.0).to_dict()], "summary": "one car"}
    seen = {}

    def handler(request):
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers["authorization"]
        return httpx.Response(200, json={"content": json.dumps(reply)})

    desc = ExternalPerceiver(_client(handler), "describe").describe([[[0.0, 1.0]]], "what is there?",
                                                                     ego=EgoContext(3.0, "L0", 50.0))
    assert desc.objects[0].distance == 12.0
    assert desc.summary == "one car"
    inner = json.loads(seen["body"]["messages"][0]["content"])
    assert inner == build_request([[[0.0, 1.0]]], "what is there?")
    assert seen["auth"] == "Bearer k"


def test_external_perceiver_rejects_non_json():
    client = _client(lambda r: httpx.Response(200, json={"content": "a car"}))
    with pytest.raises(ChatError):
        ExternalPerceiver(client, "s").describe(["frame.png"], "p")


def test_chat_http_error_and_timeout():
    with pytest.raises(ChatError, match="HTTP 500"):
        _client(lambda r: httpx.Response(500)).complete("s", [])

    def slow(request):
        raise httpx.ReadTimeout("slow", request=request)

    from leapdrive.chat import ChatTimeout
    with pytest.raises(ChatTimeout):
        _client(slow).complete("s", [])


def test_chat_needs_endpoint(monkeypatch):
    monkeypatch.delenv("LEAPDRIVE_CHAT_ENDPOINT", raising=False)
    with pytest.raises(ChatError, match="endpoint"):
        ChatClient()
