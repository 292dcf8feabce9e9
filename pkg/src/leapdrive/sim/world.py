"""Tick-based world: ego vehicle, scripted agents, traffic lights, infractions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import cumulative_arclength, interpolate_polyline, project_to_polyline, rects_overlap
from .scenario import AgentSpec, Scenario
from .vehicle import Control, VehicleState, step_vehicle

PHYSICS_DT = 0.05  # 20 Hz
OFF_ROAD_MARGIN = 0.5

ACCIDENT_KINDS = ("collision_vehicle", "collision_pedestrian", "collision_static", "off_road", "red_light_violation")
_COLLISION_KIND = {
    "vehicle": "collision_vehicle",
    "cyclist": "collision_vehicle",
    "pedestrian": "collision_pedestrian",
    "static": "collision_static",
}


@dataclass(frozen=True)
class AccidentInfo:
    kind: str
    timestep: int
    objects: tuple[str, ...]
    location: tuple[float, float]

    def __post_init__(self):
        if self.kind not in ACCIDENT_KINDS:
            raise ValueError(f"unknown accident kind {self.kind!r}")

    @property
    def is_collision(self) -> bool:
        return self.kind.startswith("collision")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "timestep": self.timestep, "objects": list(self.objects), "location": list(self.location)}

    @classmethod
    def from_dict(cls, d: dict) -> "AccidentInfo":
        return cls(d["kind"], int(d["timestep"]), tuple(d["objects"]), tuple(d["location"]))


@dataclass(frozen=True)
class AgentState:
    id: str
    kind: str
    x: float
    y: float
    heading: float
    speed: float
    vx: float
    vy: float
    half_length: float
    half_width: float

    @property
    def footprint(self) -> tuple[float, float, float, float, float]:
        return (self.x, self.y, self.heading, self.half_length, self.half_width)


@dataclass(frozen=True)
class LightState:
    id: str
    lane: str
    stop_s: float
    phase: str
    x: float
    y: float


@dataclass(frozen=True)
class StopSignState:
    id: str
    lane: str
    stop_s: float
    x: float
    y: float


@dataclass(frozen=True)
class WorldSnapshot:
    """Immutable view of the world at one tick."""

    tick: int
    time: float
    ego: VehicleState
    prev_ego: VehicleState
    agents: tuple[AgentState, ...]
    lights: tuple[LightState, ...]
    stop_signs: tuple[StopSignState, ...] = ()

    def agent(self, agent_id: str) -> AgentState:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)


@dataclass
class _AgentRuntime:
    spec: AgentSpec
    cum: np.ndarray
    s: float
    speed: float
    target_speed: float
    accel: float
    offset: float
    lc_from: float = 0.0
    lc_to: float = 0.0
    lc_start: float = -1.0
    lc_duration: float = 1.0
    next_cmd: int = 0

    def pose(self, t: float) -> tuple[float, float, float, float, float]:
        p, h = interpolate_polyline(self.spec.path, self.s)
        off = self.offset
        lat_rate = 0.0
        if self.lc_start >= 0.0:
            u = min(1.0, max(0.0, (t - self.lc_start) / self.lc_duration))
            # cosine blend keeps lateral velocity continuous at both ends
            w = 0.5 - 0.5 * math.cos(math.pi * u)
            off = self.lc_from + (self.lc_to - self.lc_from) * w
            if u < 1.0:
                lat_rate = (self.lc_to - self.lc_from) * 0.5 * math.pi * math.sin(math.pi * u) / self.lc_duration
        nx, ny = -math.sin(h), math.cos(h)
        x, y = p[0] + off * nx, p[1] + off * ny
        vx = self.speed * math.cos(h) + lat_rate * nx
        vy = self.speed * math.sin(h) + lat_rate * ny
        heading = math.atan2(vy, vx) if self.speed > 0.05 else h
        return x, y, heading, vx, vy


class World:
    """Mutable simulation state advanced by :meth:`tick`; snapshots are immutable."""

    def __init__(self, scenario: Scenario, dt: float = PHYSICS_DT):
        self.scenario = scenario
        self.dt = dt
        self.tick_count = 0
        self.time = 0.0
        lane = scenario.lanes[scenario.ego.lane]
        p, h = lane.pose_at(scenario.ego.s)
        self.ego = VehicleState(x=float(p[0]), y=float(p[1]), heading=h, speed=scenario.ego.speed)
        self.prev_ego = self.ego
        self._agents = [
            _AgentRuntime(
                spec=a,
                cum=cumulative_arclength(a.path),
                s=a.s,
                speed=a.speed,
                target_speed=a.speed,
                accel=3.0,
                offset=a.offset,
            )
            for a in scenario.agents
        ]
        self._apply_commands()

    def _apply_commands(self) -> None:
        for ag in self._agents:
            cmds = ag.spec.commands
            while ag.next_cmd < len(cmds) and cmds[ag.next_cmd].t <= self.time + 1e-9:
                c = cmds[ag.next_cmd]
                if c.speed is not None:
                    ag.target_speed = float(c.speed)
                    ag.accel = c.accel
                if c.lane_change is not None:
                    sign = 1.0 if c.lane_change == "left" else -1.0
                    ag.lc_from = ag.offset
                    ag.lc_to = ag.offset + sign * ag.spec.lane_width
                    ag.lc_start = self.time
                    ag.lc_duration = c.duration
                ag.next_cmd += 1

    def _step_agent(self, ag: _AgentRuntime) -> None:
        if ag.spec.kind == "static":
            return
        dv = ag.target_speed - ag.speed
        step = ag.accel * self.dt
        new_speed = ag.target_speed if abs(dv) <= step else ag.speed + math.copysign(step, dv)
        ag.s += 0.5 * (ag.speed + new_speed) * self.dt
        ag.speed = new_speed
        if ag.lc_start >= 0.0 and self.time >= ag.lc_start + ag.lc_duration:
            ag.offset = ag.lc_to
            ag.lc_start = -1.0

    def tick(self, control: Control) -> WorldSnapshot:
        self.prev_ego = self.ego
        self.ego = step_vehicle(self.ego, control, self.dt)
        for ag in self._agents:
            self._step_agent(ag)
        self.tick_count += 1
        self.time = self.tick_count * self.dt
        self._apply_commands()
        return self.snapshot()

    def snapshot(self) -> WorldSnapshot:
        agents = []
        for ag in self._agents:
            x, y, h, vx, vy = ag.pose(self.time)
            agents.append(
                AgentState(ag.spec.id, ag.spec.kind, x, y, h, ag.speed, vx, vy, ag.spec.half_length, ag.spec.half_width)
            )
        lights = []
        for l in self.scenario.lights:
            p, _ = self.scenario.lanes[l.lane].pose_at(l.stop_s)
            lights.append(LightState(l.id, l.lane, l.stop_s, l.phase_at(self.time), float(p[0]), float(p[1])))
        signs = []
        for sgn in self.scenario.stop_signs:
            p, _ = self.scenario.lanes[sgn.lane].pose_at(sgn.stop_s)
            signs.append(StopSignState(sgn.id, sgn.lane, sgn.stop_s, float(p[0]), float(p[1])))
        return WorldSnapshot(
            tick=self.tick_count,
            time=self.time,
            ego=self.ego,
            prev_ego=self.prev_ego,
            agents=tuple(agents),
            lights=tuple(lights),
            stop_signs=tuple(signs),
        )

    def replace_ego(self, ego: VehicleState) -> None:
        self.ego = ego
        self.prev_ego = ego


def _front_point(ego: VehicleState) -> np.ndarray:
    return np.array([ego.x + ego.half_length * math.cos(ego.heading), ego.y + ego.half_length * math.sin(ego.heading)])


def detect_accident(snapshot: WorldSnapshot, scenario: Scenario) -> AccidentInfo | None:
    """First infraction at this tick, by priority collision > red light > off-road.

    Pure in its inputs, so repeated calls on an unchanged snapshot agree.
    """
    ego = snapshot.ego
    loc = (ego.x, ego.y)
    for a in snapshot.agents:
        if rects_overlap(ego.footprint, a.footprint):
            return AccidentInfo(_COLLISION_KIND[a.kind], snapshot.tick, (a.id,), loc)

    front_now = _front_point(ego)
    front_prev = _front_point(snapshot.prev_ego)
    for light in snapshot.lights:
        if light.phase != "red":
            continue
        lane = scenario.lanes[light.lane]
        s_now, d_now = lane.project(front_now)
        s_prev, _ = lane.project(front_prev)
        if abs(d_now) <= lane.width / 2.0 and s_prev < light.stop_s <= s_now:
            return AccidentInfo("red_light_violation", snapshot.tick, (light.id,), loc)

    if not scenario.lanes.on_any_lane(loc, margin=OFF_ROAD_MARGIN):
        return AccidentInfo("off_road", snapshot.tick, (), loc)
    return None


def route_progress(route_points: np.ndarray, pose, previous: float = 0.0) -> float:
    """Fraction of the route covered by the projection of ``pose``.

    Pass the previous value to get max-so-far semantics over an episode.
    """
    pts = np.asarray(route_points, dtype=float)
    total = cumulative_arclength(pts)[-1]
    if total <= 0:
        return 1.0
    s, _, _ = project_to_polyline(pts, (pose[0], pose[1]))
    frac = min(1.0, max(0.0, s / total))
    return max(previous, frac)


__all__ = [
    "ACCIDENT_KINDS", "AccidentInfo", "AgentState", "LightState", "PHYSICS_DT", "StopSignState",
    "World", "WorldSnapshot", "detect_accident", "route_progress",
]
