from .describe import (
    DEFAULT_FRAMES, EGO_ID, CriticalityRadii, CriticalObject, EgoContext, SceneDescription, criticality_filter,
    describe_scene, render_summary, trend_of,
)
from .external import ExternalPerceiver, Perceiver, build_request, parse_response

__all__ = [
    "DEFAULT_FRAMES", "EGO_ID", "CriticalObject", "CriticalityRadii", "EgoContext", "ExternalPerceiver", "Perceiver",
    "SceneDescription", "build_request", "criticality_filter", "describe_scene", "parse_response", "render_summary",
    "trend_of",
]
