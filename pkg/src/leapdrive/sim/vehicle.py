"""Kinematic bicycle vehicle model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

log = logging.getLogger(__name__)

MAX_STEER = 0.6  # rad
MAX_ACCEL = 3.0  # m/s^2 at full throttle
MAX_DECEL = 8.0  # m/s^2 at full brake
MAX_DT = 0.1


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float = 0.0
    acceleration: float = 0.0
    steering: float = 0.0
    wheelbase: float = 2.7
    half_length: float = 2.25
    half_width: float = 0.95

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if abs(self.steering) > MAX_STEER + 1e-12:
            raise ValueError(f"|steering| must be <= {MAX_STEER}, got {self.steering}")
        if self.wheelbase <= 0:
            raise ValueError("wheelbase must be positive")

    @property
    def footprint(self) -> tuple[float, float, float, float, float]:
        return (self.x, self.y, self.heading, self.half_length, self.half_width)

    def to_dict(self) -> dict:
        return {
            "x": self.x, "y": self.y, "heading": self.heading, "speed": self.speed,
            "acceleration": self.acceleration, "steering": self.steering,
        }


@dataclass(frozen=True)
class Control:
    throttle: float = 0.0
    brake: float = 0.0
    steer: float = 0.0


def _clamp(name: str, v: float, lo: float, hi: float) -> float:
    if v < lo or v > hi:
        log.debug("clamping %s=%r to [%s, %s]", name, v, lo, hi)
        return min(max(v, lo), hi)
    return v


def step_vehicle(state: VehicleState, control: Control, dt: float) -> VehicleState:
    """Advance one explicit-Euler step of the kinematic bicycle.

    Throttle maps linearly to ``MAX_ACCEL`` and brake to ``MAX_DECEL``;
    speed is clamped at zero so braking never reverses the car.
    """
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt}")
    throttle = _clamp("throttle", control.throttle, 0.0, 1.0)
    brake = _clamp("brake", control.brake, 0.0, 1.0)
    steer = _clamp("steer", control.steer, -1.0, 1.0)

    delta = steer * MAX_STEER
    accel = throttle * MAX_ACCEL - brake * MAX_DECEL
    v = state.speed
    x = state.x + v * math.cos(state.heading) * dt
    y = state.y + v * math.sin(state.heading) * dt
    heading = state.heading + v * math.tan(delta) / state.wheelbase * dt
    new_v = max(0.0, v + accel * dt)
    actual_accel = (new_v - v) / dt
    return replace(state, x=x, y=y, heading=heading, speed=new_v, acceleration=actual_accel, steering=delta)
