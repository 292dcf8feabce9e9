"""Scene encoder: ego-state MLP + pooled scene projection, fused into two unit halves."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import EGO_DIM, HALF_DIM, N_INTENTS, TOKEN_DIM, EncoderConfig

NORM_EPS = 1e-12


class ShapeError(ValueError):
    pass


def param_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    h = config.hidden
    shapes = {
        "ego.w1": (EGO_DIM, h),
        "ego.b1": (h,),
        "ego.w2": (h, TOKEN_DIM),
        "ego.b2": (TOKEN_DIM,),
        "scene.w": (config.grid_c, TOKEN_DIM),
        "scene.b": (TOKEN_DIM,),
        "fuse.w": (2 * TOKEN_DIM, TOKEN_DIM),
        "fuse.b": (TOKEN_DIM,),
    }
    if config.pooling == "attention":
        shapes["scene.att"] = (config.grid_c,)
    return shapes


def init_weights(config: EncoderConfig, seed: int | None = None) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    out = {}
    for name, shape in param_shapes(config).items():
        if len(shape) == 2:
            out[name] = rng.normal(0.0, np.sqrt(2.0 / shape[0]), size=shape)
        elif name == "scene.att":
            out[name] = rng.normal(0.0, 0.1, size=shape)
        else:
            out[name] = np.zeros(shape)
    return out


@dataclass
class EncoderParams:
    """Online weights and their momentum-averaged copy."""

    online: dict[str, np.ndarray]
    momentum: dict[str, np.ndarray]
    config: EncoderConfig

    @classmethod
    def initialise(cls, config: EncoderConfig, seed: int | None = None) -> "EncoderParams":
        w = init_weights(config, seed)
        return cls(online=w, momentum={k: v.copy() for k, v in w.items()}, config=config)

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            {k: v.copy() for k, v in self.online.items()},
            {k: v.copy() for k, v in self.momentum.items()},
            self.config,
        )

    def check(self) -> None:
        shapes = param_shapes(self.config)
        for which, weights in (("online", self.online), ("momentum", self.momentum)):
            if set(weights) != set(shapes):
                raise ShapeError(f"{which} weights have keys {sorted(weights)}, expected {sorted(shapes)}")
            for k, shape in shapes.items():
                if weights[k].shape != shape:
                    raise ShapeError(f"{which}[{k}] has shape {weights[k].shape}, expected {shape}")
                if not np.all(np.isfinite(weights[k])):
                    raise ValueError(f"{which}[{k}] has non-finite values")


def ego_state(intent: int, speed: float, speed_scale: float = 10.0) -> np.ndarray:
    """9-d ego state: one-hot navigation intent (8) and scaled speed."""
    if not 0 <= int(intent) < N_INTENTS:
        raise ValueError(f"intent must be in [0, {N_INTENTS}), got {intent}")
    v = np.zeros(EGO_DIM)
    v[int(intent)] = 1.0
    v[-1] = speed / speed_scale
    return v


def momentum_update(theta_m, theta, alpha: float):
    """``alpha * theta_m + (1 - alpha) * theta``, per array or per dict entry."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must be in [0, 1)")
    if isinstance(theta_m, dict):
        if set(theta_m) != set(theta):
            raise ShapeError("parameter sets differ")
        return {k: momentum_update(theta_m[k], theta[k], alpha) for k in theta_m}
    theta_m = np.asarray(theta_m, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if theta_m.shape != theta.shape:
        raise ShapeError(f"momentum shape {theta_m.shape} != online shape {theta.shape}")
    return alpha * theta_m + (1.0 - alpha) * theta


def _check_inputs(weights, features, ego, config: EncoderConfig):
    features = np.asarray(features, dtype=float)
    ego = np.asarray(ego, dtype=float)
    if features.ndim == 2:
        features = features[None]
    if ego.ndim == 1:
        ego = ego[None]
    if features.shape[1:] != (config.grid_n, config.grid_c):
        raise ShapeError(
            f"feature grid has shape {features.shape[1:]}, expected ({config.grid_n}, {config.grid_c})"
        )
    if ego.shape[1:] != (EGO_DIM,):
        raise ShapeError(f"ego state has dim {ego.shape[1:]}, expected ({EGO_DIM},)")
    if features.shape[0] != ego.shape[0]:
        raise ShapeError(f"batch mismatch: {features.shape[0]} grids vs {ego.shape[0]} ego states")
    return features, ego


def forward(weights: dict, features, ego, config: EncoderConfig, cache: bool = False):
    """Batch forward pass; returns ``(tokens (B, 256), cache or None)``."""
    F, A = _check_inputs(weights, features, ego, config)
    h1 = A @ weights["ego.w1"] + weights["ego.b1"]
    r1 = np.maximum(h1, 0.0)
    f_ego = r1 @ weights["ego.w2"] + weights["ego.b2"]

    if config.pooling == "max_pool":
        idx = np.argmax(F, axis=1)  # (B, C)
        pooled = np.take_along_axis(F, idx[:, None, :], axis=1)[:, 0, :]
        att = None
    else:
        scores = F @ weights["scene.att"]  # (B, N)
        scores = scores - scores.max(axis=1, keepdims=True)
        att = np.exp(scores)
        att /= att.sum(axis=1, keepdims=True)
        pooled = np.einsum("bn,bnc->bc", att, F)
        idx = None
    f_scene = pooled @ weights["scene.w"] + weights["scene.b"]

    z = np.concatenate([f_ego, f_scene], axis=1)
    rz = np.maximum(z, 0.0)
    u = rz @ weights["fuse.w"] + weights["fuse.b"]
    ua, uc = u[:, :HALF_DIM], u[:, HALF_DIM:]
    na = np.linalg.norm(ua, axis=1, keepdims=True) + NORM_EPS
    nc = np.linalg.norm(uc, axis=1, keepdims=True) + NORM_EPS
    tokens = np.concatenate([ua / na, uc / nc], axis=1)
    if not cache:
        return tokens, None
    return tokens, dict(F=F, A=A, h1=h1, r1=r1, idx=idx, att=att, pooled=pooled, z=z, rz=rz, na=na, nc=nc, tokens=tokens)


def backward(weights: dict, cache: dict, d_tokens: np.ndarray, config: EncoderConfig) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every weight, given ``dL/dtokens``."""
    g = cache["tokens"]
    ga, gc = g[:, :HALF_DIM], g[:, HALF_DIM:]
    da, dc = d_tokens[:, :HALF_DIM], d_tokens[:, HALF_DIM:]
    # d(u/|u|) = (I - g g^T) / |u|
    du_a = (da - ga * np.sum(da * ga, axis=1, keepdims=True)) / cache["na"]
    du_c = (dc - gc * np.sum(dc * gc, axis=1, keepdims=True)) / cache["nc"]
    du = np.concatenate([du_a, du_c], axis=1)

    grads = {}
    grads["fuse.w"] = cache["rz"].T @ du
    grads["fuse.b"] = du.sum(axis=0)
    dz = (du @ weights["fuse.w"].T) * (cache["z"] > 0)
    d_ego, d_scene = dz[:, :TOKEN_DIM], dz[:, TOKEN_DIM:]

    grads["scene.w"] = cache["pooled"].T @ d_scene
    grads["scene.b"] = d_scene.sum(axis=0)
    if config.pooling == "attention":
        d_pooled = d_scene @ weights["scene.w"].T  # (B, C)
        F, att = cache["F"], cache["att"]
        d_att = np.einsum("bc,bnc->bn", d_pooled, F)
        d_scores = att * (d_att - np.sum(att * d_att, axis=1, keepdims=True))
        grads["scene.att"] = np.einsum("bn,bnc->c", d_scores, F)

    grads["ego.w2"] = cache["r1"].T @ d_ego
    grads["ego.b2"] = d_ego.sum(axis=0)
    dh1 = (d_ego @ weights["ego.w2"].T) * (cache["h1"] > 0)
    grads["ego.w1"] = cache["A"].T @ dh1
    grads["ego.b1"] = dh1.sum(axis=0)
    return grads


class SceneToken:
    """256-d token made of a unit ACT half and a unit ACC half."""

    __slots__ = ("vector",)

    def __init__(self, vector):
        v = np.asarray(vector, dtype=float).reshape(-1)
        if v.shape != (TOKEN_DIM,):
            raise ShapeError(f"scene token must have {TOKEN_DIM} entries, got {v.shape[0]}")
        self.vector = v

    @property
    def act(self) -> np.ndarray:
        return self.vector[:HALF_DIM]

    @property
    def acc(self) -> np.ndarray:
        return self.vector[HALF_DIM:]

    def __array__(self, dtype=None, copy=None):
        return self.vector if dtype is None else self.vector.astype(dtype)

    def __eq__(self, other) -> bool:
        return isinstance(other, SceneToken) and np.array_equal(self.vector, other.vector)

    def __repr__(self) -> str:
        return f"SceneToken({self.vector[:3].round(4).tolist()}...)"


def encode(params: EncoderParams | dict, features, ego, config: EncoderConfig | None = None) -> SceneToken:
    """Encode one feature grid plus 9-d ego state with the online weights."""
    if isinstance(params, EncoderParams):
        weights, config = params.online, params.config
    else:
        weights = params
    tokens, _ = forward(weights, features, ego, config)
    if tokens.shape[0] != 1:
        raise ShapeError("encode takes a single sample; use encode_batch")
    return SceneToken(tokens[0])


def encode_batch(weights: dict, features, ego, config: EncoderConfig) -> np.ndarray:
    return forward(weights, features, ego, config)[0]


def save_params(params: EncoderParams, path) -> None:
    """Both weight sets plus the config, in one ``.npz`` archive."""
    arrays = {f"online/{k}": v for k, v in params.online.items()}
    arrays.update({f"momentum/{k}": v for k, v in params.momentum.items()})
    arrays["config"] = np.array(json.dumps(params.config.to_dict()))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path) -> EncoderParams:
    with np.load(path) as data:
        config = EncoderConfig.from_dict(json.loads(str(data["config"])))
        online = {k.split("/", 1)[1]: data[k] for k in data.files if k.startswith("online/")}
        momentum = {k.split("/", 1)[1]: data[k] for k in data.files if k.startswith("momentum/")}
    params = EncoderParams(online, momentum, config)
    params.check()
    return params
