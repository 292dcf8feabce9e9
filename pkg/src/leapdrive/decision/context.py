"""Inputs handed to a reasoning backend, in structured and rendered form."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..perception.describe import SceneDescription
from ..sim.world import AccidentInfo
from .history import HistoryRecord
from .memory import Experience

MANEUVERS = ("straight", "left", "right", "lane_change_left", "lane_change_right")


@dataclass(frozen=True)
class NavigationHint:
    maneuver: str = "straight"
    distance: float = 0.0
    target_speed: float = 10.0

    def __post_init__(self):
        if self.maneuver not in MANEUVERS:
            raise ValueError(f"unknown maneuver {self.maneuver!r}")
        if self.distance < 0:
            raise ValueError("distance to maneuver must be >= 0")
        if self.target_speed < 0:
            raise ValueError("target speed must be >= 0")

    def render(self) -> str:
        what = self.maneuver.replace("_", " ")
        return f"Navigation: {what} in {self.distance:.0f} m, target speed {self.target_speed:.1f} m/s."

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EgoStatus:
    speed: float
    acceleration: float = 0.0
    steering: float = 0.0

    def render(self) -> str:
        return (f"Ego: speed {self.speed:.1f} m/s, acceleration {self.acceleration:+.1f} m/s^2, "
                f"steering {self.steering:+.2f} rad.")

    def to_dict(self) -> dict:
        return asdict(self)


def _render_shot(i: int, exp: Experience, similarity: float | None) -> str:
    sim = f" (similarity {similarity:.3f})" if similarity is not None else ""
    return "\n".join([
        f"### Example {i}{sim}",
        exp.description.summary,
        f"Reasoning: {exp.reasoning}",
        f"Decision: {exp.decision.value}",
    ])


@dataclass(frozen=True)
class DecisionContext:
    """Traffic rules, optional few-shot examples and the current D, N, A."""

    rules: str
    description: SceneDescription
    navigation: NavigationHint
    ego: EgoStatus
    shots: tuple[Experience, ...] = ()
    similarities: tuple[float, ...] = ()

    def render(self) -> str:
        parts = []
        if self.shots:
            parts.append("## Similar past experiences")
            sims = self.similarities or (None,) * len(self.shots)
            parts.extend(_render_shot(i, e, s) for i, (e, s) in enumerate(zip(self.shots, sims), 1))
        parts += [
            "## Current scene",
            self.description.summary,
            self.navigation.render(),
            self.ego.render(),
            "Answer with a Reasoning line and a final 'Decision: <ACTION>' line.",
        ]
        return "\n".join(parts)


@dataclass(frozen=True)
class ReflectionContext:
    prompt: str
    rules: str
    accident: AccidentInfo
    steps: tuple[HistoryRecord, ...]

    def render(self) -> str:
        a = self.accident
        parts = [
            "## Accident",
            f"{a.kind} at tick {a.timestep} involving {', '.join(a.objects) or 'no other object'} "
            f"at ({a.location[0]:.1f}, {a.location[1]:.1f}).",
            "## Recent steps (oldest first)",
        ]
        for i, rec in enumerate(self.steps, 1):
            parts += [f"### Step {i} (tick {rec.tick})", rec.description.summary,
                      f"Reasoning: {rec.reasoning}", f"Decision: {rec.decision.value}"]
        return "\n".join(parts)
