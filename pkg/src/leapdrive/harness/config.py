from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

MODES = ("analytic", "heuristic")

# CARLA-leaderboard style multipliers; off-road shares the static-object value
DEFAULT_PENALTIES = {
    "collision_pedestrian": 0.50,
    "collision_vehicle": 0.60,
    "collision_static": 0.65,
    "red_light_violation": 0.70,
    "off_road": 0.65,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything needed to replay one episode bit-identically."""

    scenario: str | dict = "builtin:straight"
    mode: str = "analytic"
    analytic_backend: str = "rule_oracle"
    heuristic_backend: str = "experience_follower"
    follow_threshold: float = 0.97
    k: int = 3
    bank_path: str | None = None
    reflection: bool = False
    seed: int = 0
    encoder_weights: str | None = None
    encoder_seed: int = 0
    prompts_dir: str | None = None
    decision_hz: float = 2.0
    history_hz: float = 1.0
    physics_dt: float = 0.05
    frames: int = 5
    backend_timeout: float = 10.0
    max_sim_time: float | None = None
    max_wall_time: float | None = None
    penalties: dict = field(default_factory=lambda: dict(DEFAULT_PENALTIES))
    episode_id: str = "episode"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if self.mode == "heuristic" and self.k > 0 and not self.bank_path:
            raise ConfigError("heuristic mode with k > 0 needs a bank_path")
        if self.decision_hz <= 0 or self.history_hz <= 0 or self.physics_dt <= 0:
            raise ConfigError("rates must be positive")
        ratio = 1.0 / (self.physics_dt * self.decision_hz)
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("decision period must be a whole number of physics ticks")
        hist = self.decision_hz / self.history_hz
        if abs(hist - round(hist)) > 1e-9 or round(hist) < 1:
            raise ConfigError("history period must be a whole number of decision ticks")
        if self.frames < 1:
            raise ConfigError("frames must be >= 1")
        missing = set(DEFAULT_PENALTIES) - set(self.penalties)
        if missing:
            raise ConfigError(f"penalty table lacks {sorted(missing)}")
        for kind, p in self.penalties.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"penalty for {kind} must be in [0, 1]")

    @property
    def ticks_per_decision(self) -> int:
        return int(round(1.0 / (self.physics_dt * self.decision_hz)))

    @property
    def decisions_per_history(self) -> int:
        return int(round(self.decision_hz / self.history_hz))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "EpisodeConfig":
        text = Path(path).read_text()
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        return cls.from_dict(data or {})

    def with_(self, **changes) -> "EpisodeConfig":
        return replace(self, **changes)
