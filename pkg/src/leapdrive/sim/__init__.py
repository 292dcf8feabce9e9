from .geometry import rect_separation, rects_overlap, wrap_angle
from .lanes import Lane, LaneGraph, LaneGraphError
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, straight_road
from .vehicle import MAX_STEER, Control, VehicleState, step_vehicle
from .world import PHYSICS_DT, AccidentInfo, AgentState, World, WorldSnapshot, detect_accident, route_progress

__all__ = [
    "AccidentInfo", "AgentState", "Control", "Lane", "LaneGraph", "LaneGraphError", "MAX_STEER",
    "PHYSICS_DT", "Scenario", "ScenarioError", "VehicleState", "World", "WorldSnapshot",
    "detect_accident", "load_scenario", "parse_scenario", "rect_separation", "rects_overlap",
    "route_progress", "step_vehicle", "straight_road", "wrap_angle",
]
