"""Builtin scenario documents, addressable as ``builtin:<name>`` in configs."""

from __future__ import annotations

import numpy as np

from ..sim.scenario import straight_road


def clean_straight(route_length: float = 200.0) -> dict:
    doc = straight_road(length=route_length + 80.0, route_length=route_length)
    doc["name"] = "clean_straight"
    return doc


def lead_brake(gap: float = 7.5, speed: float = 10.0, brake_time: float = 4.0, decel: float = 8.0,
               resume_time: float = 9.0) -> dict:
    """Ego follows a lead car too closely; the lead brakes hard to a stop, then drives on."""
    doc = straight_road(length=500.0, route_length=300.0)
    doc["name"] = "lead_brake"
    doc["ego"] = {"lane": "L0", "s": 20.0, "speed": speed, "target_speed": speed}
    doc["route"] = [[20.0, 0.0], [300.0, 0.0]]
    doc["agents"] = [{
        "id": "lead",
        "kind": "vehicle",
        "lane": "L0",
        "s": 20.0 + gap,
        "speed": speed,
        "commands": [
            {"t": brake_time, "speed": 0.0, "accel": decel},
            {"t": resume_time, "speed": speed, "accel": 2.0},
        ],
    }]
    doc["limits"] = {"max_sim_time": 60.0, "max_wall_time": 120.0}
    return doc


def random_traffic(seed: int = 0) -> dict:
    """Two-lane road with a lead car that changes speed, side traffic and a traffic light."""
    rng = np.random.default_rng(seed)
    doc = straight_road(length=420.0, route_length=300.0, lanes=2)
    doc["name"] = f"random_traffic_{seed}"
    doc["seed"] = int(seed)
    ego_speed = float(rng.uniform(4.0, 10.0))
    doc["ego"] = {"lane": "L0", "s": 10.0, "speed": ego_speed, "target_speed": float(rng.uniform(8.0, 12.0))}
    doc["route"] = [[10.0, 0.0], [310.0, 0.0]]
    lead_speed = float(rng.uniform(4.0, 10.0))
    t_change = float(rng.uniform(3.0, 12.0))
    agents = [{
        "id": "lead",
        "kind": "vehicle",
        "lane": "L0",
        "s": 10.0 + float(rng.uniform(12.0, 40.0)),
        "speed": lead_speed,
        "commands": [
            {"t": t_change, "speed": float(rng.uniform(0.0, 6.0)), "accel": float(rng.uniform(1.0, 4.0))},
            {"t": t_change + float(rng.uniform(3.0, 8.0)), "speed": float(rng.uniform(8.0, 12.0)), "accel": 2.0},
        ],
    }]
    for i in range(int(rng.integers(0, 3))):
        agents.append({
            "id": f"side{i}",
            "kind": "vehicle",
            "lane": "L1",
            "s": float(rng.uniform(0.0, 120.0)),
            "speed": float(rng.uniform(5.0, 12.0)),
        })
    doc["agents"] = agents
    if rng.random() < 0.5:
        doc["traffic_lights"] = [{
            "id": "tl0",
            "lane": "L0",
            "stop_s": float(rng.uniform(120.0, 220.0)),
            "schedule": [["green", 10.0], ["yellow", 3.0], ["red", 8.0]],
            "offset": float(rng.uniform(0.0, 21.0)),
        }]
    doc["limits"] = {"max_sim_time": 90.0, "max_wall_time": 120.0}
    return doc


BUILTINS = {
    "straight": clean_straight,
    "lead_brake": lead_brake,
    "random_traffic": random_traffic,
}


def builtin(spec: str) -> dict:
    """``builtin:name`` or ``builtin:name:arg`` (one numeric argument, e.g. a seed)."""
    parts = spec.split(":")
    if parts[0] != "builtin" or len(parts) not in (2, 3) or parts[1] not in BUILTINS:
        raise KeyError(f"unknown builtin scenario {spec!r}; choose from {sorted(BUILTINS)}")
    fn = BUILTINS[parts[1]]
    if len(parts) == 3:
        arg = float(parts[2])
        return fn(int(arg) if arg.is_integer() else arg)
    return fn()
