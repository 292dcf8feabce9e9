"""Dual-space (ACT / ACC) label-thresholded contrastive loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

SPACES = ("act", "acc")


def positive_mask(query_labels, key_labels, sigma: float, rule: str = "threshold") -> np.ndarray:
    """Boolean ``(B, M)`` mask of positive keys for each query.

    ``threshold``: ``|label' - label| < sigma``. ``concurrence`` (braking
    only): positive iff both brake or neither does.
    """
    q = np.atleast_1d(np.asarray(query_labels, dtype=float))[:, None]
    k = np.atleast_1d(np.asarray(key_labels, dtype=float))[None, :]
    if rule == "threshold":
        return np.abs(k - q) < sigma
    if rule == "concurrence":
        return (k > 0) == (q > 0)
    raise ValueError(f"unknown rule {rule!r}")


def partition_pairs(query_label: float, key_labels, space: str, sigma: float, rule: str = "threshold"):
    """Indices of positive and negative keys; negatives are the complement."""
    if space not in SPACES:
        raise ValueError(f"space must be one of {SPACES}")
    if space == "act" and rule != "threshold":
        raise ValueError("the steering space only supports the threshold rule")
    mask = positive_mask([query_label], key_labels, sigma, rule)[0]
    return np.flatnonzero(mask), np.flatnonzero(~mask)


@dataclass
class LossResult:
    loss: float
    grad: np.ndarray  # dL/dg, shape of the queries
    per_sample: np.ndarray
    skipped: int


def contrastive_loss(queries, keys, pos_mask, temperature: float, denominator: str = "negatives_only") -> LossResult:
    """Batch-mean of ``-log(sum_pos exp(g.z/t) / sum_neg exp(g.z/t))``.

    Queries with no positive or no negative key contribute zero and are
    counted in ``skipped``. With ``denominator="all"`` the denominator runs
    over every key instead of negatives only.
    """
    g = np.atleast_2d(np.asarray(queries, dtype=float))
    z = np.atleast_2d(np.asarray(keys, dtype=float))
    pos = np.atleast_2d(np.asarray(pos_mask, dtype=bool))
    neg = ~pos
    B = g.shape[0]
    logits = g @ z.T / temperature
    valid = pos.any(axis=1) & neg.any(axis=1)

    neg_inf = -np.inf
    lp = np.where(pos, logits, neg_inf)
    den_mask = neg if denominator == "negatives_only" else np.ones_like(pos)
    ln = np.where(den_mask, logits, neg_inf)

    per = np.zeros(B)
    d_logits = np.zeros_like(logits)
    if valid.any():
        lse_p = logsumexp(lp[valid], axis=1)
        lse_n = logsumexp(ln[valid], axis=1)
        per[valid] = -lse_p + lse_n
        d_logits[valid] = -softmax(lp[valid], axis=1) + softmax(ln[valid], axis=1)
    d_logits /= B
    grad = d_logits @ z / temperature
    return LossResult(float(per.sum() / B), grad, per, int(B - valid.sum()))


def sample_loss(query, keys, key_labels, query_label: float, space: str, sigma: float, temperature: float,
                rule: str = "threshold", denominator: str = "negatives_only") -> float | None:
    """Loss of a single query; ``None`` when it would be skipped."""
    pos_idx, neg_idx = partition_pairs(query_label, key_labels, space, sigma, rule)
    if len(pos_idx) == 0 or len(neg_idx) == 0:
        return None
    mask = np.zeros(len(key_labels), bool)
    mask[pos_idx] = True
    return contrastive_loss(query, keys, mask[None], temperature, denominator).loss


def total_loss(l_act: float, l_acc: float, lambda_act: float = 1.0, lambda_acc: float = 1.0) -> float:
    return lambda_act * l_act + lambda_acc * l_acc
