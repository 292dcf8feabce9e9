"""Ground-truth scene describer producing critical objects with attributes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..sim.geometry import project_to_polyline, wrap_angle
from ..sim.scenario import Scenario
from ..sim.world import WorldSnapshot

EGO_ID = "ego"
DEFAULT_FRAMES = 5
STATIC_CLOSING = 0.2  # m/s

CATEGORIES = ("vehicle", "cyclist", "pedestrian", "traffic_light", "stop_sign", "static")
RELATIONS = ("same", "left", "right", "oncoming", "crossing")
TRENDS = ("approaching", "receding", "static")


@dataclass(frozen=True)
class CriticalityRadii:
    lane_ahead: float = 60.0
    oncoming: float = 40.0
    crossing: float = 30.0
    traffic_control: float = 50.0
    rear: float = 15.0  # adjacent-lane traffic closing from behind

    def scaled(self, factor: float) -> "CriticalityRadii":
        return CriticalityRadii(*(v * factor for v in asdict(self).values()))


@dataclass(frozen=True)
class CriticalObject:
    id: str
    category: str
    # ego-frame box: centre ahead / left (m), heading relative to ego (rad), length, width
    box: tuple[float, float, float, float, float]
    lane_relation: str
    distance: float
    direction: str
    closing_speed: float
    trend: str
    reasoning: str
    state: str | None = None
    speed: float = 0.0

    def __post_init__(self):
        if self.distance < 0:
            raise ValueError("distance must be non-negative")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.lane_relation not in RELATIONS:
            raise ValueError(f"unknown lane relation {self.lane_relation!r}")
        if self.trend != trend_of(self.closing_speed):
            raise ValueError(f"trend {self.trend!r} inconsistent with closing speed {self.closing_speed:+.2f}")

    @property
    def ahead(self) -> float:
        return self.box[0]

    @property
    def lateral(self) -> float:
        return self.box[1]

    @property
    def ttc(self) -> float:
        """Time to collision from centre distance; ``inf`` unless approaching."""
        if self.closing_speed <= STATIC_CLOSING:
            return math.inf
        return self.distance / self.closing_speed

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CriticalObject":
        d = dict(d)
        d["box"] = tuple(d["box"])
        return cls(**d)


@dataclass(frozen=True)
class EgoContext:
    speed: float
    lane: str
    junction_distance: float
    acceleration: float = 0.0


@dataclass(frozen=True)
class SceneDescription:
    frame: int
    objects: tuple[CriticalObject, ...]
    ego: EgoContext
    summary: str = field(default="", compare=False)

    def __post_init__(self):
        dists = [o.distance for o in self.objects]
        if dists != sorted(dists):
            raise ValueError("critical objects must be sorted by distance")
        if not self.summary:
            object.__setattr__(self, "summary", render_summary(self))

    @property
    def nearest(self) -> CriticalObject | None:
        return self.objects[0] if self.objects else None

    def lead(self) -> CriticalObject | None:
        """Nearest same-lane road user ahead."""
        for o in self.objects:
            if o.lane_relation == "same" and o.category in ("vehicle", "cyclist", "pedestrian", "static") and o.ahead > 0:
                return o
        return None

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "objects": [o.to_dict() for o in self.objects],
            "ego": asdict(self.ego),
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneDescription":
        return cls(
            frame=int(d["frame"]),
            objects=tuple(CriticalObject.from_dict(o) for o in d["objects"]),
            ego=EgoContext(**d["ego"]),
            summary=d.get("summary", ""),
        )


def trend_of(closing_speed: float) -> str:
    if abs(closing_speed) < STATIC_CLOSING:
        return "static"
    return "approaching" if closing_speed > 0 else "receding"


def render_summary(desc: SceneDescription) -> str:
    """Deterministic text rendering of a description."""
    e = desc.ego
    lines = [
        f"Frame {desc.frame}. Ego speed {e.speed:.1f} m/s in lane {e.lane}, "
        f"{e.junction_distance:.0f} m to the next junction."
    ]
    if not desc.objects:
        lines.append("There are no critical objects.")
        return "\n".join(lines)
    lines.append(f"Critical objects: {len(desc.objects)}.")
    for k, o in enumerate(desc.objects, 1):
        state = f" showing {o.state}" if o.state else ""
        x, y, _, length, width = o.box
        lines.append(
            f"{k}. {o.category}{state} in the {o.lane_relation} lane, {o.direction}, {o.trend}; "
            f"distance {o.distance:.1f} m, closing speed {o.closing_speed:+.1f} m/s, "
            f"final box [{x:.1f}, {y:.1f}, {length:.1f}, {width:.1f}]. Note: {o.reasoning}."
        )
    return "\n".join(lines)


def _reasoning(category: str, relation: str, trend: str, state: str | None) -> str:
    if category == "traffic_light":
        return "must stop at intersection" if state in ("red", "yellow") else "proceed through intersection with caution"
    if category == "stop_sign":
        return "must stop at stop line"
    if relation == "crossing":
        return "pedestrian crossing path, yield" if category == "pedestrian" else "crossing traffic, yield"
    if relation == "oncoming":
        return "oncoming traffic, keep to lane"
    if relation == "same":
        if category == "static":
            return "obstacle blocking lane"
        return "lead vehicle closing in, keep safe distance" if trend == "approaching" else "lead vehicle ahead, follow"
    if category == "static":
        return "roadside obstacle"
    return "adjacent-lane traffic, check before lane change"


def _direction(rel_heading: float, moving: bool) -> str:
    if not moving:
        return "stationary"
    c, s = math.cos(rel_heading), math.sin(rel_heading)
    if c > 0.7:
        return "same direction"
    if c < -0.7:
        return "opposite direction"
    return "crossing right-to-left" if s > 0 else "crossing left-to-right"


@dataclass
class _Reference:
    """Ego lane followed through successors; frame for lane relations."""

    points: np.ndarray
    width: float
    lane_ids: tuple[str, ...]
    ego_s: float

    def coords(self, p) -> tuple[float, float]:
        s, d, _ = project_to_polyline(self.points, p)
        return s - self.ego_s, d


def _reference(scenario: Scenario, snap: WorldSnapshot) -> tuple[_Reference, str, float]:
    ego = snap.ego
    lanes = scenario.lanes
    lane, _, _ = lanes.locate((ego.x, ego.y), ego.heading)
    # include predecessors so objects just behind the lane start still project
    pts = [lane.points]
    ids = [lane.id]
    cur = lane
    total = lane.length
    while cur.successors and total < 200.0 and cur.successors[0] not in ids:
        cur = lanes[cur.successors[0]]
        pts.append(cur.points[1:])
        ids.append(cur.id)
        total += cur.length
    pts = np.concatenate(pts)
    head = pts[0] - (pts[1] - pts[0]) / np.linalg.norm(pts[1] - pts[0]) * 100.0
    tail = pts[-1] + (pts[-1] - pts[-2]) / np.linalg.norm(pts[-1] - pts[-2]) * 100.0
    pts = np.vstack([head, pts, tail])
    s_ego, _, _ = project_to_polyline(pts, (ego.x, ego.y))
    s_lane_start = 100.0
    junction = max(0.0, s_lane_start + lane.length - s_ego)
    return _Reference(pts, lane.width, tuple(ids), s_ego), lane.id, junction


def _ego_frame(snap: WorldSnapshot, x: float, y: float) -> tuple[float, float]:
    ego = snap.ego
    dx, dy = x - ego.x, y - ego.y
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    return dx * c + dy * s, -dx * s + dy * c


def _closing_speed(window: list[WorldSnapshot], dist_of) -> float:
    if len(window) >= 2:
        t = np.array([w.time for w in window])
        dist = np.array([dist_of(w) for w in window])
        if np.ptp(t) > 0:
            slope = np.polyfit(t - t[-1], dist, 1)[0]
            return float(-slope)
    return 0.0


def _candidates(window: list[WorldSnapshot], scenario: Scenario) -> tuple[list[CriticalObject], str, float]:
    snap = window[-1]
    ego = snap.ego
    ref, lane_id, junction = _reference(scenario, snap)
    out: list[CriticalObject] = []

    def ego_dist(w: WorldSnapshot, x: float, y: float) -> float:
        return math.hypot(x - w.ego.x, y - w.ego.y)

    for a in snap.agents:
        ahead, lat = _ego_frame(snap, a.x, a.y)
        _, d_ref = ref.coords((a.x, a.y))
        dist = math.hypot(a.x - ego.x, a.y - ego.y)
        moving = a.speed > 0.3
        motion_heading = math.atan2(a.vy, a.vx) if moving else a.heading
        rel = wrap_angle(motion_heading - ego.heading)
        if moving and abs(math.sin(rel)) > 0.7:
            relation = "crossing"
        elif moving and math.cos(rel) < -0.5:
            relation = "oncoming"
        elif abs(d_ref) < ref.width / 2.0:
            relation = "same"
        elif d_ref > 0:
            relation = "left"
        else:
            relation = "right"

        def dist_of(w, aid=a.id):
            try:
                other = w.agent(aid)
            except KeyError:
                return dist
            return ego_dist(w, other.x, other.y)

        if len(window) >= 2:
            closing = _closing_speed(window, dist_of)
        else:
            rx, ry = a.x - ego.x, a.y - ego.y
            rvx = a.vx - ego.speed * math.cos(ego.heading)
            rvy = a.vy - ego.speed * math.sin(ego.heading)
            closing = -(rx * rvx + ry * rvy) / max(dist, 1e-9)
        closing = round(closing, 6)
        trend = trend_of(closing)
        category = a.kind
        out.append(
            CriticalObject(
                id=a.id,
                category=category,
                box=(ahead, lat, wrap_angle(a.heading - ego.heading), 2 * a.half_length, 2 * a.half_width),
                lane_relation=relation,
                distance=dist,
                direction=_direction(rel, moving),
                closing_speed=closing,
                trend=trend,
                reasoning=_reasoning(category, relation, trend, None),
                speed=a.speed,
            )
        )

    controls = [(l.id, "traffic_light", l.lane, l.x, l.y, l.phase) for l in snap.lights]
    controls += [(s.id, "stop_sign", s.lane, s.x, s.y, None) for s in snap.stop_signs]
    for cid, category, lane, x, y, state in controls:
        if lane not in ref.lane_ids:
            continue
        ahead, lat = _ego_frame(snap, x, y)
        dist = math.hypot(x - ego.x, y - ego.y)
        closing = round(_closing_speed(window, lambda w, x=x, y=y: ego_dist(w, x, y)) if len(window) >= 2
                        else ego.speed * (1.0 if ahead > 0 else -1.0), 6)
        trend = trend_of(closing)
        out.append(
            CriticalObject(
                id=cid,
                category=category,
                box=(ahead, lat, 0.0, 0.5, ref.width),
                lane_relation="same",
                distance=dist,
                direction="stationary",
                closing_speed=closing,
                trend=trend,
                reasoning=_reasoning(category, "same", trend, state),
                state=state,
            )
        )
    return out, lane_id, junction


def criticality_filter(objects, radii: CriticalityRadii = CriticalityRadii(), lane_width: float = 3.5) -> list[CriticalObject]:
    """Objects that matter for the next decision (explicit rule set).

    Same/adjacent-lane objects ahead within ``lane_ahead``; oncoming within
    ``oncoming``; crossing within ``crossing``; governing traffic controls
    ahead within ``traffic_control``. Behind the ego only adjacent-lane road
    users that are approaching within ``rear`` survive (lane-change gap check).
    """
    keep = []
    for o in objects:
        if o.ahead <= 0.0:
            if (o.lane_relation in ("left", "right") and o.trend == "approaching"
                    and o.category in ("vehicle", "cyclist") and o.distance <= radii.rear):
                keep.append(o)
            continue
        if o.category in ("traffic_light", "stop_sign"):
            ok = o.distance <= radii.traffic_control
        elif o.lane_relation == "oncoming":
            ok = o.distance <= radii.oncoming
        elif o.lane_relation == "crossing":
            ok = o.distance <= radii.crossing
        else:
            adjacent = abs(o.lateral) < 1.5 * lane_width + 0.5
            ok = adjacent and o.distance <= radii.lane_ahead
        if ok:
            keep.append(o)
    return keep


def describe_scene(window, ego_id: str = EGO_ID, scenario: Scenario | None = None,
                   radii: CriticalityRadii = CriticalityRadii()) -> SceneDescription:
    """Describe the newest frame of ``window`` (oldest first) for the ego vehicle."""
    if ego_id != EGO_ID:
        raise KeyError(f"unknown ego id {ego_id!r}")
    window = list(window)
    if not window:
        raise ValueError("describe_scene needs at least one frame")
    if scenario is None:
        raise ValueError("describe_scene needs the scenario for lane context")
    cands, lane_id, junction = _candidates(window, scenario)
    width = scenario.lanes[lane_id].width
    objs = sorted(criticality_filter(cands, radii, width), key=lambda o: (o.distance, o.id))
    snap = window[-1]
    return SceneDescription(
        frame=snap.tick,
        objects=tuple(objs),
        ego=EgoContext(speed=snap.ego.speed, lane=lane_id, junction_distance=junction, acceleration=snap.ego.acceleration),
    )


__all__ = [
    "CATEGORIES", "CriticalObject", "CriticalityRadii", "DEFAULT_FRAMES", "EGO_ID", "EgoContext", "RELATIONS",
    "SceneDescription", "criticality_filter", "describe_scene", "render_summary", "trend_of",
]
