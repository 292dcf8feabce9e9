"""Scenario documents (JSON) and their validated in-memory form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .lanes import Lane, LaneGraph, LaneGraphError, arc_points, line_points

SCHEMA_VERSION = 1
ROUTE_TOLERANCE = 0.5  # m beyond half lane width

AGENT_KINDS = ("vehicle", "cyclist", "pedestrian", "static")
DEFAULT_EXTENTS = {
    "vehicle": (2.25, 0.95),
    "cyclist": (0.9, 0.35),
    "pedestrian": (0.3, 0.3),
    "static": (1.0, 1.0),
}
PHASES = ("red", "yellow", "green")

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "lanes", "ego", "route"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "lanes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "points": {"type": "array", "items": _point, "minItems": 2},
                    "line": {
                        "type": "object",
                        "required": ["start", "end"],
                        "properties": {"start": _point, "end": _point},
                    },
                    "arc": {
                        "type": "object",
                        "required": ["center", "radius", "start_angle", "end_angle"],
                        "properties": {
                            "center": _point,
                            "radius": {"type": "number", "exclusiveMinimum": 0},
                            "start_angle": {"type": "number"},
                            "end_angle": {"type": "number"},
                        },
                    },
                    "width": {"type": "number", "exclusiveMinimum": 2.0},
                    "successors": {"type": "array", "items": {"type": "string"}},
                    "left": {"type": ["string", "null"]},
                    "right": {"type": ["string", "null"]},
                },
                "oneOf": [{"required": ["points"]}, {"required": ["line"]}, {"required": ["arc"]}],
            },
        },
        "traffic_lights": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "lane", "stop_s", "schedule"],
                "properties": {
                    "id": {"type": "string"},
                    "lane": {"type": "string"},
                    "stop_s": {"type": "number", "minimum": 0},
                    "schedule": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "array",
                            "prefixItems": [{"enum": list(PHASES)}, {"type": "number", "exclusiveMinimum": 0}],
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                    "offset": {"type": "number", "minimum": 0},
                },
            },
        },
        "stop_signs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "lane", "stop_s"],
                "properties": {"id": {"type": "string"}, "lane": {"type": "string"}, "stop_s": {"type": "number"}},
            },
        },
        "ego": {
            "type": "object",
            "required": ["lane", "s"],
            "properties": {
                "lane": {"type": "string"},
                "s": {"type": "number"},
                "speed": {"type": "number", "minimum": 0},
                "target_speed": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "route": {"type": "array", "items": _point, "minItems": 2},
        "agents": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": list(AGENT_KINDS)},
                    "lane": {"type": "string"},
                    "s": {"type": "number"},
                    "path": {"type": "array", "items": _point, "minItems": 2},
                    "offset": {"type": "number"},
                    "speed": {"type": "number", "minimum": 0},
                    "half_length": {"type": "number", "exclusiveMinimum": 0},
                    "half_width": {"type": "number", "exclusiveMinimum": 0},
                    "commands": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["t"],
                            "properties": {
                                "t": {"type": "number", "minimum": 0},
                                "speed": {"type": "number", "minimum": 0},
                                "accel": {"type": "number", "exclusiveMinimum": 0},
                                "lane_change": {"enum": ["left", "right"]},
                                "duration": {"type": "number", "exclusiveMinimum": 0},
                            },
                        },
                    },
                },
                "oneOf": [{"required": ["lane"]}, {"required": ["path"]}],
            },
        },
        "navigation": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from_s", "to_s", "maneuver"],
                "properties": {
                    "from_s": {"type": "number"},
                    "to_s": {"type": "number"},
                    "maneuver": {"enum": ["straight", "left", "right", "lane_change_left", "lane_change_right"]},
                    "target_speed": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "limits": {
            "type": "object",
            "properties": {
                "max_sim_time": {"type": "number", "exclusiveMinimum": 0},
                "max_wall_time": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


class ScenarioError(ValueError):
    """Schema or consistency violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class AgentCommand:
    t: float
    speed: float | None = None
    accel: float = 3.0
    lane_change: str | None = None
    duration: float = 3.0


@dataclass(frozen=True)
class AgentSpec:
    id: str
    kind: str
    path: np.ndarray
    s: float
    speed: float
    half_length: float
    half_width: float
    offset: float = 0.0
    lane_width: float = 3.5
    commands: tuple[AgentCommand, ...] = ()


@dataclass(frozen=True)
class TrafficLightSpec:
    id: str
    lane: str
    stop_s: float
    schedule: tuple[tuple[str, float], ...]
    offset: float = 0.0

    @property
    def cycle(self) -> float:
        return sum(d for _, d in self.schedule)

    def phase_at(self, t: float) -> str:
        tau = (t + self.offset) % self.cycle
        for phase, dur in self.schedule:
            if tau < dur:
                return phase
            tau -= dur
        return self.schedule[-1][0]


@dataclass(frozen=True)
class StopSignSpec:
    id: str
    lane: str
    stop_s: float


@dataclass(frozen=True)
class NavigationEvent:
    from_s: float
    to_s: float
    maneuver: str
    target_speed: float | None = None


@dataclass(frozen=True)
class EgoSpawn:
    lane: str
    s: float
    speed: float = 0.0
    target_speed: float = 10.0


@dataclass(frozen=True)
class Scenario:
    name: str
    lanes: LaneGraph
    ego: EgoSpawn
    route: np.ndarray
    agents: tuple[AgentSpec, ...] = ()
    lights: tuple[TrafficLightSpec, ...] = ()
    stop_signs: tuple[StopSignSpec, ...] = ()
    navigation: tuple[NavigationEvent, ...] = ()
    max_sim_time: float = 120.0
    max_wall_time: float = 300.0
    seed: int = 0
    document: dict = field(default_factory=dict, compare=False, repr=False)

    def canonical(self) -> str:
        """Canonical JSON of the source document; stable across loads."""
        return json.dumps(self.document, sort_keys=True, separators=(",", ":"))


def _fmt_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _lane_points(doc: dict) -> np.ndarray:
    if "points" in doc:
        pts = np.asarray(doc["points"], dtype=float)
        # resample coarse polylines so centreline spacing stays <= 1 m
        out = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            out.extend(line_points(a, b)[1:])
        return np.asarray(out)
    if "line" in doc:
        return line_points(doc["line"]["start"], doc["line"]["end"])
    arc = doc["arc"]
    return arc_points(arc["center"], arc["radius"], arc["start_angle"], arc["end_angle"])


def _agent_path(graph: LaneGraph, lane_id: str, min_length: float = 500.0) -> tuple[np.ndarray, float]:
    lane = graph[lane_id]
    pts = [lane.points]
    total = lane.length
    seen = {lane_id}
    while total < min_length and lane.successors:
        nxt = lane.successors[0]
        if nxt in seen:
            break
        seen.add(nxt)
        lane = graph[nxt]
        pts.append(lane.points[1:])
        total += lane.length
    path = np.concatenate(pts)
    # straight extension so agents never run out of path
    tail = path[-1] - path[-2]
    tail = tail / np.linalg.norm(tail)
    ext = path[-1] + np.outer(np.arange(1, 201) * 2.5, tail)
    return np.concatenate([path, ext]), graph[lane_id].width


def parse_scenario(doc: dict) -> Scenario:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(_fmt_path(err.absolute_path), err.message)

    rng = np.random.default_rng(doc.get("seed", 0))
    light_docs = doc.get("traffic_lights", [])
    stop_by_lane: dict[str, list[float]] = {}
    for l in light_docs:
        stop_by_lane.setdefault(l["lane"], []).append(float(l["stop_s"]))
    for sgn in doc.get("stop_signs", []):
        stop_by_lane.setdefault(sgn["lane"], []).append(float(sgn["stop_s"]))

    lanes = {}
    for i, ld in enumerate(doc["lanes"]):
        if ld["id"] in lanes:
            raise ScenarioError(f"$.lanes[{i}].id", f"duplicate lane id {ld['id']!r}")
        lanes[ld["id"]] = Lane(
            id=ld["id"],
            points=_lane_points(ld),
            width=float(ld.get("width", 3.5)),
            successors=tuple(ld.get("successors", ())),
            left=ld.get("left"),
            right=ld.get("right"),
            stop_lines=tuple(sorted(stop_by_lane.get(ld["id"], ()))),
        )
    try:
        graph = LaneGraph(lanes)
    except LaneGraphError as exc:
        raise ScenarioError("$.lanes", str(exc)) from exc

    def need_lane(path: str, lane_id: str) -> None:
        if lane_id not in lanes:
            raise ScenarioError(path, f"unknown lane {lane_id!r}")

    ego_doc = doc["ego"]
    need_lane("$.ego.lane", ego_doc["lane"])
    ego = EgoSpawn(
        lane=ego_doc["lane"],
        s=float(ego_doc["s"]),
        speed=float(ego_doc.get("speed", 0.0)),
        target_speed=float(ego_doc.get("target_speed", 10.0)),
    )

    route = np.asarray(doc["route"], dtype=float)
    for i, wp in enumerate(route):
        if not graph.on_any_lane(wp, margin=ROUTE_TOLERANCE):
            raise ScenarioError(f"$.route[{i}]", f"route waypoint {i} at ({wp[0]:g}, {wp[1]:g}) is not on any lane")

    lights = []
    for i, l in enumerate(light_docs):
        need_lane(f"$.traffic_lights[{i}].lane", l["lane"])
        schedule = tuple((p, float(d)) for p, d in l["schedule"])
        cycle = sum(d for _, d in schedule)
        offset = float(l["offset"]) if "offset" in l else float(rng.uniform(0.0, cycle))
        lights.append(TrafficLightSpec(l["id"], l["lane"], float(l["stop_s"]), schedule, offset))

    stop_signs = []
    for i, sgn in enumerate(doc.get("stop_signs", [])):
        need_lane(f"$.stop_signs[{i}].lane", sgn["lane"])
        stop_signs.append(StopSignSpec(sgn["id"], sgn["lane"], float(sgn["stop_s"])))

    agents = []
    for i, ad in enumerate(doc.get("agents", [])):
        hl, hw = DEFAULT_EXTENTS[ad["kind"]]
        if "lane" in ad:
            need_lane(f"$.agents[{i}].lane", ad["lane"])
            path, width = _agent_path(graph, ad["lane"])
        else:
            path, width = np.asarray(ad["path"], dtype=float), 3.5
        cmds = tuple(
            AgentCommand(
                t=float(c["t"]),
                speed=c.get("speed"),
                accel=float(c.get("accel", 3.0)),
                lane_change=c.get("lane_change"),
                duration=float(c.get("duration", 3.0)),
            )
            for c in sorted(ad.get("commands", []), key=lambda c: c["t"])
        )
        agents.append(
            AgentSpec(
                id=ad["id"],
                kind=ad["kind"],
                path=path,
                s=float(ad.get("s", 0.0)),
                speed=0.0 if ad["kind"] == "static" else float(ad.get("speed", 0.0)),
                half_length=float(ad.get("half_length", hl)),
                half_width=float(ad.get("half_width", hw)),
                offset=float(ad.get("offset", 0.0)),
                lane_width=width,
                commands=cmds,
            )
        )

    nav = tuple(
        NavigationEvent(float(n["from_s"]), float(n["to_s"]), n["maneuver"], n.get("target_speed"))
        for n in doc.get("navigation", [])
    )
    limits = doc.get("limits", {})
    return Scenario(
        name=doc.get("name", "scenario"),
        lanes=graph,
        ego=ego,
        route=route,
        agents=tuple(agents),
        lights=tuple(lights),
        stop_signs=tuple(stop_signs),
        navigation=nav,
        max_sim_time=float(limits.get("max_sim_time", 120.0)),
        max_wall_time=float(limits.get("max_wall_time", 300.0)),
        seed=int(doc.get("seed", 0)),
        document=doc,
    )


def load_scenario(source) -> Scenario:
    """Load a scenario from a path, a JSON string, or an already-parsed dict."""
    if isinstance(source, dict):
        return parse_scenario(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON: {exc}") from exc
    return parse_scenario(doc)


def straight_road(length: float = 250.0, route_length: float = 200.0, lanes: int = 1, width: float = 3.5) -> dict:
    """Document for a straight multi-lane road along +x; lane ``L0`` is the rightmost."""
    lane_docs = []
    for i in range(lanes):
        y = i * width
        lane_docs.append(
            {
                "id": f"L{i}",
                "line": {"start": [0.0, y], "end": [length, y]},
                "width": width,
                "left": f"L{i + 1}" if i + 1 < lanes else None,
                "right": f"L{i - 1}" if i > 0 else None,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "name": "straight",
        "seed": 0,
        "lanes": lane_docs,
        "ego": {"lane": "L0", "s": 0.0, "speed": 0.0, "target_speed": 10.0},
        "route": [[0.0, 0.0], [route_length, 0.0]],
        "agents": [],
        "limits": {"max_sim_time": 60.0, "max_wall_time": 60.0},
    }
