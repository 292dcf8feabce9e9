"""Lookahead point selection and the two PID loops (speed and heading)."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..sim.geometry import wrap_angle
from ..sim.vehicle import Control, VehicleState

LONGITUDINAL_GAINS = (1.95, 0.05, 0.2)
LATERAL_GAINS = (1.0, 0.05, 0.0)
BUFFER_SIZE = 10

K_LOOK = 20.0
V_MIN = 1.0
I_MIN = 4
I_MAX = 40


def lookahead_index(speed: float, k_look: float = K_LOOK, v_min: float = V_MIN,
                    i_min: int = I_MIN, i_max: int = I_MAX) -> int:
    """Sample index to track: further ahead when slow, closer when fast."""
    return int(min(max(round(k_look / max(speed, v_min)), i_min), i_max))


def lookahead_select(traj, speed: float, offset: int = 0) -> tuple[float, np.ndarray]:
    """Target speed and waypoint from a sampled trajectory.

    ``offset`` is the sample the vehicle has already reached (time since
    the plan was made, in samples).
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    i = min(offset + lookahead_index(speed), len(traj) - 1)
    return float(traj.speed[i]), np.array([traj.x[i], traj.y[i]])


@dataclass
class PidState:
    kp: float
    ki: float
    kd: float
    buffer: deque = field(default_factory=lambda: deque(maxlen=BUFFER_SIZE))
    lo: float = -1.0
    hi: float = 1.0

    def reset(self) -> None:
        self.buffer.clear()


def pid_step(state: PidState, error: float, dt: float) -> float:
    """P + I + D with the integral taken over the ring buffer.

    The current error is pushed before the sums, so the derivative uses
    the previous buffered sample and is zero on the first call. The raw
    output is returned; use :func:`longitudinal_command` or
    :func:`lateral_command` for actuator mapping.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    prev = state.buffer[-1] if state.buffer else None
    state.buffer.append(error)
    integral = sum(state.buffer) * dt
    derivative = 0.0 if prev is None else (error - prev) / dt
    return state.kp * error + state.ki * integral + state.kd * derivative


def longitudinal_command(output: float) -> tuple[float, float]:
    """Split a speed-loop output into ``(throttle, brake)``, each in [0, 1]."""
    if output >= 0.0:
        return min(output, 1.0), 0.0
    return 0.0, min(-output, 1.0)


def lateral_command(output: float) -> float:
    return float(np.clip(output, -1.0, 1.0))


@dataclass
class VehicleController:
    """Speed PID (throttle/brake) plus heading PID (steer)."""

    longitudinal: PidState = field(default_factory=lambda: PidState(*LONGITUDINAL_GAINS))
    lateral: PidState = field(default_factory=lambda: PidState(*LATERAL_GAINS))

    def control(self, ego: VehicleState, target_speed: float, target_point, dt: float) -> Control:
        throttle, brake = longitudinal_command(pid_step(self.longitudinal, target_speed - ego.speed, dt))
        if target_speed < 0.05 and ego.speed < 0.3:
            # hold at standstill
            throttle, brake = 0.0, 1.0
        dx = target_point[0] - ego.x
        dy = target_point[1] - ego.y
        if math.hypot(dx, dy) < 0.5:
            heading_error = 0.0
        else:
            heading_error = wrap_angle(math.atan2(dy, dx) - ego.heading)
        steer = lateral_command(pid_step(self.lateral, heading_error, dt))
        return Control(throttle=throttle, brake=brake, steer=steer)
