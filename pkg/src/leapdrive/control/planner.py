"""Meta-action target states, quintic Frenet candidates and cost-based selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from ..sim.geometry import rect_separation, wrap_angle
from .path import DensePath, FrenetState, frenet_to_world
from .quintic import QuinticPoly, quintic_solve

HORIZON = 5.0
DT = 0.05
N_SAMPLES = int(round(HORIZON / DT)) + 1
INFEASIBLE = math.inf


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    w_jerk: float = 0.1
    w_accel: float = 0.1
    w_speed: float = 1.0
    w_lateral: float = 0.5
    w_clearance: float = 1.0
    clearance: float = 2.0  # m, soft barrier radius
    delta_accel: float = 1.0
    max_accel: float = 3.0
    comfort_decel: float = 3.0
    emergency_decel: float = 8.0
    advance_factors: tuple[float, ...] = (0.8, 1.0, 1.2)
    speed_factors: tuple[float, ...] = (0.9, 1.0, 1.1)
    max_speed: float = math.inf
    ego_half_length: float = 2.25
    ego_half_width: float = 0.95

    def to_dict(self) -> dict:
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class ObstaclePrediction:
    """Constant-velocity footprint prediction."""

    id: str
    x: float
    y: float
    heading: float
    vx: float
    vy: float
    half_length: float
    half_width: float

    def footprints(self, t: np.ndarray) -> np.ndarray:
        n = len(t)
        out = np.empty((n, 5))
        out[:, 0] = self.x + self.vx * t
        out[:, 1] = self.y + self.vy * t
        out[:, 2] = self.heading
        out[:, 3] = self.half_length
        out[:, 4] = self.half_width
        return out


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    jerk: np.ndarray
    s: np.ndarray
    d: np.ndarray
    candidate: int = -1
    cost: float = 0.0
    emergency: bool = False
    # per-sample lateral jerk/accel for the cost integrals
    lat_accel: np.ndarray = field(default=None, repr=False)
    lat_jerk: np.ndarray = field(default=None, repr=False)
    s_dot: np.ndarray = field(default=None, repr=False)
    target: FrenetState | None = None

    def __len__(self) -> int:
        return len(self.t)

    def footprints(self, half_length: float, half_width: float) -> np.ndarray:
        return np.stack(
            [self.x, self.y, self.heading, np.full_like(self.x, half_length), np.full_like(self.x, half_width)], axis=1
        )

    def to_record(self) -> dict:
        return {
            "candidate": self.candidate,
            "cost": self.cost if math.isfinite(self.cost) else None,
            "emergency": self.emergency,
            "end_speed": float(self.speed[-1]),
            "end_d": float(self.d[-1]),
            "target": None if self.target is None else self.target.__dict__,
        }


def _stop_target(ego: FrenetState, stop_distance: float | None, T: float) -> FrenetState:
    v0 = max(ego.s_d, 0.0)
    if v0 < 0.1:
        return FrenetState(s=ego.s, s_d=0.0, d=0.0, t=T)
    free = v0 * T / 2.0
    if stop_distance is None or stop_distance >= free:
        dist = free if stop_distance is None else stop_distance
        return FrenetState(s=ego.s + dist, s_d=0.0, d=0.0, t=T)
    dist = max(stop_distance, 0.05)
    # v0 * (1 - 3 tau^2 + 2 tau^3) covers exactly v0 * T_s / 2
    return FrenetState(s=ego.s + dist, s_d=0.0, d=0.0, t=max(2.0 * dist / v0, 0.2))


def target_state(meta: str, ego: FrenetState, path: DensePath, lane_width: float,
                 config: PlannerConfig = PlannerConfig(), current_accel: float | None = None,
                 stop_distance: float | None = None, T: float = HORIZON) -> list[FrenetState]:
    """Candidate terminal states for a meta-action.

    Lane-change actions raise :class:`PlanningError` when the path has no
    lane on that side; callers downgrade to IDLE.
    """
    a_cur = ego.s_dd if current_accel is None else current_accel
    v = max(ego.s_d, 0.0)
    if meta in ("AC", "DC"):
        if meta == "AC":
            a = min(a_cur + config.delta_accel, config.max_accel)
        else:
            a = max(a_cur - config.delta_accel, -config.comfort_decel)
        v_T = max(0.0, v + a * T)
        if meta == "AC" and v_T > config.max_speed:
            v_T = max(config.max_speed, v)
            a = (v_T - v) / T
        if v_T == 0.0 and a < 0:
            # stops inside the horizon: monotone stop over the braking distance
            return [_stop_target(ego, v * v / (2.0 * -a), T)]
        return [FrenetState(s=ego.s + v * T + 0.5 * a * T * T, s_d=v_T, d=0.0, t=T)]
    if meta == "STOP":
        return [_stop_target(ego, stop_distance, T)]
    if meta == "IDLE":
        return [FrenetState(s=ego.s + v * T, s_d=v, d=0.0, t=T)]
    if meta in ("LCL", "LCR"):
        side = "left" if meta == "LCL" else "right"
        if not path.has_adjacent(ego.s, side):
            raise PlanningError(f"{meta}: no lane on the {side} at s={ego.s:.1f}")
        d_T = lane_width if meta == "LCL" else -lane_width
        nominal = max(v, 1.0) * T
        out = []
        for fa in config.advance_factors:
            for fv in config.speed_factors:
                out.append(FrenetState(s=ego.s + fa * nominal, s_d=fv * v, d=d_T, t=T))
        return out
    raise PlanningError(f"unknown meta-action {meta!r}")


def _sample(path: DensePath, ego: FrenetState, target: FrenetState, horizon: float, stop_profile: bool) -> Trajectory:
    t = np.linspace(0.0, horizon, N_SAMPLES)
    a0 = 0.0 if stop_profile else ego.s_dd
    lon = quintic_solve(ego.s, max(ego.s_d, 0.0), a0, target.s, target.s_d, 0.0, target.t)
    lat = quintic_solve(ego.d, ego.d_d, ego.d_dd, target.d, 0.0, 0.0, horizon)
    inside = t <= target.t
    tc = np.minimum(t, target.t)
    s = np.where(inside, lon(tc), target.s + target.s_d * (t - target.t))
    s_d = np.where(inside, lon(tc, 1), target.s_d)
    s_dd = np.where(inside, lon(tc, 2), 0.0)
    s_ddd = np.where(inside, lon(tc, 3), 0.0)
    d = lat(t)
    d_d = lat(t, 1)
    xy = frenet_to_world(path, s, d)
    _, tang = path.frames(s)
    path_heading = np.arctan2(tang[:, 1], tang[:, 0])
    heading = path_heading + np.arctan2(d_d, np.maximum(s_d, 1e-3))
    heading = np.array([wrap_angle(h) for h in heading])
    return Trajectory(
        t=t,
        x=xy[:, 0],
        y=xy[:, 1],
        heading=heading,
        speed=np.hypot(s_d, d_d),
        accel=s_dd,
        jerk=s_ddd,
        s=s,
        d=d,
        lat_accel=lat(t, 2),
        lat_jerk=lat(t, 3),
        s_dot=s_d,
        target=target,
    )


def _integral(values: np.ndarray, t: np.ndarray) -> float:
    return float(trapezoid(values, t))


def trajectory_cost(traj: Trajectory, target_speed: float, obstacles=(), config: PlannerConfig = PlannerConfig()) -> float:
    """Weighted smoothness, speed-matching, lateral and obstacle cost.

    Any predicted footprint overlap, or a profile that would reverse, is
    infeasible and costs ``inf``.
    """
    if traj.s_dot is not None and np.any(traj.s_dot < -0.05):
        return INFEASIBLE
    jerk2 = traj.jerk**2 + (traj.lat_jerk**2 if traj.lat_jerk is not None else 0.0)
    acc2 = traj.accel**2 + (traj.lat_accel**2 if traj.lat_accel is not None else 0.0)
    cost = (
        config.w_jerk * _integral(jerk2, traj.t)
        + config.w_accel * _integral(acc2, traj.t)
        + config.w_speed * (traj.speed[-1] - target_speed) ** 2
        + config.w_lateral * traj.d[-1] ** 2
    )
    if obstacles:
        ego_fp = traj.footprints(config.ego_half_length, config.ego_half_width)
        for ob in obstacles:
            gap = rect_separation(ego_fp, ob.footprints(traj.t))
            if np.any(gap < 0.0):
                return INFEASIBLE
            near = np.clip(config.clearance - gap, 0.0, None)
            cost += config.w_clearance * _integral(near**2, traj.t)
    return float(cost)


def emergency_trajectory(path: DensePath, ego: FrenetState, config: PlannerConfig = PlannerConfig()) -> Trajectory:
    t = np.linspace(0.0, HORIZON, N_SAMPLES)
    v0 = max(ego.s_d, 0.0)
    a = config.emergency_decel
    t_stop = v0 / a
    tc = np.minimum(t, t_stop)
    s = ego.s + v0 * tc - 0.5 * a * tc**2
    v = np.maximum(v0 - a * t, 0.0)
    acc = np.where(t < t_stop, -a, 0.0)
    d = np.full_like(t, ego.d)
    xy = frenet_to_world(path, s, d)
    _, tang = path.frames(s)
    heading = np.arctan2(tang[:, 1], tang[:, 0])
    return Trajectory(
        t=t, x=xy[:, 0], y=xy[:, 1], heading=heading, speed=v, accel=acc, jerk=np.zeros_like(t),
        s=s, d=d, lat_accel=np.zeros_like(t), lat_jerk=np.zeros_like(t), cost=INFEASIBLE, emergency=True,
        target=FrenetState(s=float(s[-1]), s_d=0.0, d=ego.d),
    )


@dataclass
class PlanResult:
    trajectory: Trajectory
    candidates: list[Trajectory]

    def debug_record(self) -> dict:
        return {
            "selected": self.trajectory.candidate,
            "emergency": self.trajectory.emergency,
            "candidates": [c.to_record() for c in self.candidates],
        }


def plan(meta: str, ego: FrenetState, path: DensePath, obstacles=(), target_speed: float | None = None,
         config: PlannerConfig = PlannerConfig(), stop_distance: float | None = None) -> PlanResult:
    """Best candidate trajectory for ``meta``; emergency stop when none is feasible."""
    targets = target_state(meta, ego, path, path.lane_width, config, stop_distance=stop_distance)
    stop_profile = meta == "STOP" or any(tg.s_d == 0.0 and tg.t < HORIZON for tg in targets)
    candidates = []
    for i, tg in enumerate(targets):
        traj = _sample(path, ego, tg, HORIZON, stop_profile and tg.s_d == 0.0)
        traj.candidate = i
        want = tg.s_d if target_speed is None else target_speed
        if meta in ("STOP", "DC"):
            want = tg.s_d
        traj.cost = trajectory_cost(traj, want, obstacles, config)
        candidates.append(traj)
    best = min(candidates, key=lambda c: (c.cost, c.candidate))
    if not math.isfinite(best.cost):
        best = emergency_trajectory(path, ego, config)
    return PlanResult(best, candidates)


__all__ = [
    "DT", "HORIZON", "INFEASIBLE", "N_SAMPLES", "ObstaclePrediction", "PlanResult", "PlannerConfig",
    "PlanningError", "QuinticPoly", "Trajectory", "emergency_trajectory", "plan", "target_state", "trajectory_cost",
]
