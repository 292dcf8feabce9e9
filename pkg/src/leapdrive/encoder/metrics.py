from __future__ import annotations

import numpy as np


def _unit_rows(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def precision_at_k(train_tokens, train_steer, train_brake, query_tokens, query_steer, query_brake,
                   k: int = 1, sigma_act: float = 0.04) -> dict[str, float]:
    """Retrieval precision of control labels under full-token cosine similarity.

    Steering hits need ``|delta steer| <= sigma_act``; braking hits need both
    or neither to brake. With ``k > 1`` the per-query score is the fraction
    of hits among the top ``k``.
    """
    train = _unit_rows(train_tokens)
    query = _unit_rows(query_tokens)
    if len(train) == 0 or len(query) == 0:
        raise ValueError("precision_at_k needs non-empty train and query sets")
    k = min(k, len(train))
    sims = query @ train.T
    # stable sort keeps earliest index first among ties
    top = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    ts = np.asarray(train_steer, dtype=float)[top]
    tb = np.asarray(train_brake, dtype=float)[top]
    qs = np.asarray(query_steer, dtype=float)[:, None]
    qb = np.asarray(query_brake, dtype=float)[:, None]
    steer_hit = np.abs(ts - qs) <= sigma_act + 1e-12
    brake_hit = (tb > 0) == (qb > 0)
    return {"steer": float(steer_hit.mean()), "brake": float(brake_hit.mean())}
