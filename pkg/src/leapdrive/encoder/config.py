from __future__ import annotations

import json
from dataclasses import asdict, dataclass

TOKEN_DIM = 256
HALF_DIM = 128
EGO_DIM = 9
N_INTENTS = 8


@dataclass(frozen=True)
class EncoderConfig:
    grid_n: int = 16
    grid_c: int = 64
    hidden: int = 256
    pooling: str = "max_pool"  # or "attention"
    momentum: float = 0.999
    temperature: float = 0.07
    sigma_act: float = 0.04
    sigma_acc: float = 0.04
    lambda_act: float = 1.0
    lambda_acc: float = 1.0
    acc_rule: str = "threshold"  # or "concurrence"
    denominator: str = "negatives_only"  # or "all"
    capacity: int = 4096
    lr: float = 0.03
    weight_decay: float = 1e-4
    batch_size: int = 128
    epochs: int = 12
    seed: int = 0
    jitter: float = 0.01
    dropout: float = 0.1
    speed_scale: float = 10.0

    def __post_init__(self):
        if self.pooling not in ("max_pool", "attention"):
            raise ValueError(f"pooling must be max_pool or attention, got {self.pooling!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        for name in ("sigma_act", "sigma_acc"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.capacity < self.batch_size:
            raise ValueError("dictionary capacity must be >= batch size")
        if self.acc_rule not in ("threshold", "concurrence"):
            raise ValueError(f"unknown acc_rule {self.acc_rule!r}")
        if self.denominator not in ("negatives_only", "all"):
            raise ValueError(f"unknown denominator {self.denominator!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    @classmethod
    def from_file(cls, path) -> "EncoderConfig":
        with open(path) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            import yaml

            data = yaml.safe_load(text)
        return cls.from_dict(data.get("encoder", data))
