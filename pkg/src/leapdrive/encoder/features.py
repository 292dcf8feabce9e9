"""Feature sources for the scene encoder and the training-record format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .config import N_INTENTS

INTENTS = {
    "straight": 0,
    "left": 1,
    "right": 2,
    "lane_change_left": 3,
    "lane_change_right": 4,
    "stop": 5,
}

# per lateral bin: vehicle, cyclist, pedestrian, static, red/yellow light, green light, stop sign, rel. speed
CHANNELS_PER_BIN = 8
_KIND_CHANNEL = {"vehicle": 0, "cyclist": 1, "pedestrian": 2, "static": 3}


@dataclass(frozen=True)
class TrainingRecord:
    features: np.ndarray
    intent: int
    speed: float
    steer: float
    brake: float

    def __post_init__(self):
        if not -1.0 <= self.steer <= 1.0:
            raise ValueError(f"steer label {self.steer} outside [-1, 1]")
        if not 0.0 <= self.brake <= 1.0:
            raise ValueError(f"brake label {self.brake} outside [0, 1]")
        if not 0 <= self.intent < N_INTENTS:
            raise ValueError(f"intent {self.intent} outside [0, {N_INTENTS})")

    def to_dict(self) -> dict:
        f = np.asarray(self.features)
        return {
            "features": f.ravel().tolist(),
            "shape": list(f.shape),
            "intent": int(self.intent),
            "speed": float(self.speed),
            "steer": float(self.steer),
            "brake": float(self.brake),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingRecord":
        feats = np.asarray(d["features"], dtype=float).reshape(d["shape"])
        return cls(feats, int(d["intent"]), float(d["speed"]), float(d["steer"]), float(d["brake"]))


def save_dataset(records: Iterable[TrainingRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict()) + "\n")


def load_dataset(path) -> list[TrainingRecord]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(TrainingRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad training record: {exc}") from exc
    return out


class FeatureSource(Protocol):
    def features(self, snapshot, scenario=None) -> np.ndarray: ...


@dataclass(frozen=True)
class GridRasterizer:
    """Ego-frame occupancy/velocity grid from simulator ground truth.

    Rows are longitudinal bins, columns are ``lateral bins x 8 channels``.
    Objects are splatted bilinearly so features change smoothly with pose.
    """

    n_long: int = 16
    n_lat: int = 8
    x_min: float = -10.0
    x_max: float = 70.0
    y_half: float = 7.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_long, self.n_lat * CHANNELS_PER_BIN

    def _splat(self, grid: np.ndarray, ahead: float, lat: float, channel: int, value: float) -> None:
        fx = (ahead - self.x_min) / (self.x_max - self.x_min) * self.n_long - 0.5
        fy = (lat + self.y_half) / (2 * self.y_half) * self.n_lat - 0.5
        if not (-1.0 < fx < self.n_long and -1.0 < fy < self.n_lat):
            return
        i0, j0 = math.floor(fx), math.floor(fy)
        wx, wy = fx - i0, fy - j0
        for di, wi in ((0, 1 - wx), (1, wx)):
            for dj, wj in ((0, 1 - wy), (1, wy)):
                i, j = i0 + di, j0 + dj
                if 0 <= i < self.n_long and 0 <= j < self.n_lat:
                    grid[i, j * CHANNELS_PER_BIN + channel] += wi * wj * value

    def features(self, snapshot, scenario=None) -> np.ndarray:
        grid = np.zeros(self.shape)
        ego = snapshot.ego
        c, s = math.cos(ego.heading), math.sin(ego.heading)

        def local(x, y):
            dx, dy = x - ego.x, y - ego.y
            return dx * c + dy * s, -dx * s + dy * c

        for a in snapshot.agents:
            ahead, lat = local(a.x, a.y)
            self._splat(grid, ahead, lat, _KIND_CHANNEL[a.kind], 1.0)
            rel_speed = (a.vx * c + a.vy * s - ego.speed) / 10.0
            self._splat(grid, ahead, lat, 7, rel_speed)
        for light in snapshot.lights:
            ahead, lat = local(light.x, light.y)
            self._splat(grid, ahead, lat, 5 if light.phase == "green" else 4, 1.0)
        for sign in snapshot.stop_signs:
            ahead, lat = local(sign.x, sign.y)
            self._splat(grid, ahead, lat, 6, 1.0)
        return grid


class FileFeatureSource:
    """Precomputed grids keyed by frame tick, loaded from an ``.npz`` archive."""

    def __init__(self, path):
        self.path = Path(path)
        with np.load(self.path) as data:
            self._grids = {int(k.split("_")[-1]): data[k] for k in data.files}

    def features(self, snapshot, scenario=None) -> np.ndarray:
        try:
            return self._grids[snapshot.tick]
        except KeyError:
            raise KeyError(f"{self.path}: no features for tick {snapshot.tick}") from None


STEER_LEVELS = np.round(np.linspace(-1.0, 1.0, 11), 10)
BRAKE_LEVELS = (0.0, 1.0)


def synthetic_dataset(n: int = 1000, seed: int = 0, grid_n: int = 16, grid_c: int = 64, noise: float = 0.1,
                      steer_levels=STEER_LEVELS, brake_levels=BRAKE_LEVELS) -> list[TrainingRecord]:
    """Separable records whose grids encode their steer and brake labels.

    Steering and braking are drawn from discrete levels spaced wider than
    the 0.04 threshold; each level lights a fixed channel of the first two
    rows, on top of Gaussian noise. Intent and speed are nuisance inputs.
    """
    steer_levels = np.asarray(steer_levels, dtype=float)
    brake_levels = np.asarray(brake_levels, dtype=float)
    if len(steer_levels) > grid_c or len(brake_levels) > grid_c:
        raise ValueError("grid too narrow for the label codes")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        si = int(rng.integers(len(steer_levels)))
        bi = int(rng.integers(len(brake_levels)))
        grid = rng.normal(0.0, noise, size=(grid_n, grid_c))
        grid[0, si] += 1.0
        grid[1 % grid_n, grid_c - 1 - bi] += 1.0
        out.append(
            TrainingRecord(
                features=grid,
                intent=int(rng.integers(N_INTENTS)),
                speed=float(rng.uniform(0.0, 15.0)),
                steer=float(steer_levels[si]),
                brake=float(brake_levels[bi]),
            )
        )
    return out
