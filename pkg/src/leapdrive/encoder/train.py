"""Momentum-encoder contrastive training with a FIFO key dictionary."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import HALF_DIM, EncoderConfig
from .dictionary import KeyDictionary
from .features import TrainingRecord
from .loss import contrastive_loss, positive_mask, total_loss
from .model import EncoderParams, backward, ego_state, forward, momentum_update

log = logging.getLogger(__name__)


@dataclass
class TrainingReport:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_act: list[float] = field(default_factory=list)
    epoch_acc: list[float] = field(default_factory=list)
    skipped_act: list[int] = field(default_factory=list)
    skipped_acc: list[int] = field(default_factory=list)
    steps: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def augment(features: np.ndarray, rng: np.random.Generator, jitter: float, dropout: float) -> np.ndarray:
    """Gaussian jitter plus random whole-cell dropout, batched ``(B, N, C)``."""
    out = features + rng.normal(0.0, jitter, size=features.shape)
    keep = rng.random(features.shape[:2]) >= dropout
    return out * keep[:, :, None]


@dataclass
class StepResult:
    loss: float
    l_act: float
    l_acc: float
    skipped_act: int
    skipped_acc: int
    grads: dict


def loss_and_grads(weights: dict, features, ego, steer, brake, keys, key_steer, key_brake,
                   config: EncoderConfig) -> StepResult:
    """Weighted dual-space loss of a query batch against fixed keys, with gradients."""
    tokens, cache = forward(weights, features, ego, config, cache=True)
    pos_act = positive_mask(steer, key_steer, config.sigma_act, "threshold")
    pos_acc = positive_mask(brake, key_brake, config.sigma_acc, config.acc_rule)
    act = contrastive_loss(tokens[:, :HALF_DIM], keys[:, :HALF_DIM], pos_act, config.temperature, config.denominator)
    acc = contrastive_loss(tokens[:, HALF_DIM:], keys[:, HALF_DIM:], pos_acc, config.temperature, config.denominator)
    d_tokens = np.concatenate([config.lambda_act * act.grad, config.lambda_acc * acc.grad], axis=1)
    grads = backward(weights, cache, d_tokens, config)
    loss = total_loss(act.loss, acc.loss, config.lambda_act, config.lambda_acc)
    return StepResult(loss, act.loss, acc.loss, act.skipped, acc.skipped, grads)


def sgd_step(weights: dict, grads: dict, lr: float, weight_decay: float) -> dict:
    return {k: w - lr * (grads[k] + weight_decay * w) for k, w in weights.items()}


def _stack(records: list[TrainingRecord], config: EncoderConfig):
    feats = np.stack([np.asarray(r.features, dtype=float) for r in records])
    ego = np.stack([ego_state(r.intent, r.speed, config.speed_scale) for r in records])
    steer = np.array([r.steer for r in records])
    brake = np.array([r.brake for r in records])
    return feats, ego, steer, brake


def train(config: EncoderConfig, dataset: list[TrainingRecord], params: EncoderParams | None = None,
          on_step: Callable[[int, EncoderParams], None] | None = None,
          max_steps: int | None = None) -> tuple[EncoderParams, TrainingReport]:
    """Train the online encoder; the momentum copy trails it.

    Each step: query tokens from the online weights on one augmented view,
    key tokens from the momentum weights on another, keys = dictionary plus
    the current batch keys, one SGD step on the weighted loss, then the
    momentum update and the dictionary push. ``on_step`` sees the params
    after every step.
    """
    params = EncoderParams.initialise(config) if params is None else params.copy()
    report = TrainingReport()
    if not dataset:
        msg = "empty dataset: nothing to train"
        log.warning(msg)
        report.warnings.append(msg)
        return params, report

    rng = np.random.default_rng(config.seed)
    feats, ego, steer, brake = _stack(dataset, config)
    dictionary = KeyDictionary(config.capacity)
    n = len(dataset)
    bs = min(config.batch_size, n)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        tot, la, lc, sa, sc, batches = 0.0, 0.0, 0.0, 0, 0, 0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            view_q = augment(feats[idx], rng, config.jitter, config.dropout)
            view_k = augment(feats[idx], rng, config.jitter, config.dropout)
            keys_now, _ = forward(params.momentum, view_k, ego[idx], config)
            keys = np.concatenate([dictionary.tokens, keys_now]) if len(dictionary) else keys_now
            key_steer = np.concatenate([dictionary.steer, steer[idx]])
            key_brake = np.concatenate([dictionary.brake, brake[idx]])
            res = loss_and_grads(params.online, view_q, ego[idx], steer[idx], brake[idx],
                                 keys, key_steer, key_brake, config)
            params.online = sgd_step(params.online, res.grads, config.lr, config.weight_decay)
            params.momentum = momentum_update(params.momentum, params.online, config.momentum)
            dictionary.push(keys_now, steer[idx], brake[idx])
            report.steps += 1
            tot += res.loss
            la += res.l_act
            lc += res.l_acc
            sa += res.skipped_act
            sc += res.skipped_acc
            batches += 1
            if on_step is not None:
                on_step(report.steps, params)
            if max_steps is not None and report.steps >= max_steps:
                break
        report.epoch_loss.append(tot / batches)
        report.epoch_act.append(la / batches)
        report.epoch_acc.append(lc / batches)
        report.skipped_act.append(sa)
        report.skipped_acc.append(sc)
        log.info("epoch %d: loss %.4f (act %.4f, acc %.4f)", epoch, tot / batches, la / batches, lc / batches)
        if max_steps is not None and report.steps >= max_steps:
            break
    return params, report


def encode_records(weights: dict, records: list[TrainingRecord], config: EncoderConfig) -> np.ndarray:
    feats, ego, _, _ = _stack(records, config)
    return forward(weights, feats, ego, config)[0]
