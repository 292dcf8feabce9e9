from .path import DensePath, FrenetState, PathError, densify, frenet_project, frenet_to_world, shift_path
from .planner import (
    DT, HORIZON, N_SAMPLES, ObstaclePrediction, PlannerConfig, PlanningError, PlanResult, Trajectory,
    emergency_trajectory, plan, target_state, trajectory_cost,
)
from .quintic import QuinticPoly, quintic_solve
from .tracking import (
    LATERAL_GAINS, LONGITUDINAL_GAINS, PidState, VehicleController, lateral_command, longitudinal_command,
    lookahead_index, lookahead_select, pid_step,
)

__all__ = [
    "DT", "HORIZON", "LATERAL_GAINS", "LONGITUDINAL_GAINS", "N_SAMPLES", "DensePath", "FrenetState",
    "ObstaclePrediction", "PathError", "PidState", "PlanResult", "PlannerConfig", "PlanningError", "QuinticPoly",
    "Trajectory", "VehicleController", "densify", "emergency_trajectory", "frenet_project", "frenet_to_world",
    "lateral_command", "longitudinal_command", "lookahead_index", "lookahead_select", "pid_step", "plan",
    "quintic_solve", "shift_path", "target_state", "trajectory_cost",
]
