"""Route completion, infraction score and driving score."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import DEFAULT_PENALTIES


@dataclass
class EpisodeLog:
    progress: list[float] = field(default_factory=list)  # route fraction per tick
    infractions: list[str] = field(default_factory=list)  # accident kinds in order


@dataclass(frozen=True)
class Metrics:
    RC: float
    IS: float
    DS: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.RC, self.IS, self.DS


def compute_metrics(log: EpisodeLog, penalties: dict | None = None) -> Metrics:
    """RC = 100 * max progress, IS = product of penalties, DS = RC * IS."""
    table = DEFAULT_PENALTIES if penalties is None else penalties
    rc = 100.0 * float(min(1.0, max(log.progress, default=0.0)))
    score = 1.0
    for kind in log.infractions:
        score *= table[kind]
    return Metrics(RC=rc, IS=score, DS=rc * score)
