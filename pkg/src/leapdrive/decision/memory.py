"""Experience memory bank with cosine top-k retrieval and JSONL persistence."""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..encoder.config import TOKEN_DIM
from ..perception.describe import SceneDescription
from .actions import MetaAction

PROVENANCES = ("analytic", "reflection")


class BankIOError(OSError):
    pass


@dataclass(frozen=True)
class Experience:
    token: np.ndarray
    description: SceneDescription
    reasoning: str
    decision: MetaAction
    provenance: str = "analytic"
    created_at: tuple[str, int] = ("", 0)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        tok = np.asarray(self.token, dtype=float).reshape(-1)
        if tok.shape != (TOKEN_DIM,):
            raise ValueError(f"experience token must have {TOKEN_DIM} entries, got {tok.shape[0]}")
        object.__setattr__(self, "token", tok)
        object.__setattr__(self, "decision", MetaAction(self.decision))
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Experience):
            return NotImplemented
        return (
            np.array_equal(self.token, other.token)
            and self.description == other.description
            and self.description.summary == other.description.summary
            and self.reasoning == other.reasoning
            and self.decision == other.decision
            and self.provenance == other.provenance
            and tuple(self.created_at) == tuple(other.created_at)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "token": self.token.tolist(),
            "description": self.description.to_dict(),
            "reasoning": self.reasoning,
            "decision": self.decision.value,
            "provenance": self.provenance,
            "created_at": list(self.created_at),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Experience":
        return cls(
            token=np.asarray(d["token"], dtype=float),
            description=SceneDescription.from_dict(d["description"]),
            reasoning=d["reasoning"],
            decision=MetaAction(d["decision"]),
            provenance=d["provenance"],
            created_at=(str(d["created_at"][0]), int(d["created_at"][1])),
            meta=d.get("meta", {}),
        )


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"token sizes differ: {a.shape[0]} vs {b.shape[0]}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


class MemoryBank:
    """Append-only experience store.

    Writers swap in a new ``(experiences, tokens, norms)`` snapshot under a
    lock, so concurrent readers never see a half-inserted experience.
    """

    def __init__(self, experiences=(), capacity: int | None = None):
        self.capacity = capacity
        self._lock = threading.Lock()
        exps = tuple(experiences)
        self._state = self._build(exps)

    @staticmethod
    def _build(exps: tuple[Experience, ...]):
        tokens = np.stack([e.token for e in exps]) if exps else np.zeros((0, TOKEN_DIM))
        return exps, tokens, np.linalg.norm(tokens, axis=1)

    @property
    def experiences(self) -> tuple[Experience, ...]:
        return self._state[0]

    @property
    def tokens(self) -> np.ndarray:
        return self._state[1]

    def __len__(self) -> int:
        return len(self._state[0])

    def __iter__(self):
        return iter(self._state[0])

    def __getitem__(self, i) -> Experience:
        return self._state[0][i]

    def __eq__(self, other) -> bool:
        return isinstance(other, MemoryBank) and len(self) == len(other) and all(
            a == b for a, b in zip(self.experiences, other.experiences)
        )

    def insert(self, exp: Experience) -> "MemoryBank":
        with self._lock:
            exps, tokens, norms = self._state
            new_exps = exps + (exp,)
            new_tokens = np.vstack([tokens, exp.token[None]])
            new_norms = np.append(norms, np.linalg.norm(exp.token))
            if self.capacity is not None and len(new_exps) > self.capacity:
                drop = len(new_exps) - self.capacity
                new_exps, new_tokens, new_norms = new_exps[drop:], new_tokens[drop:], new_norms[drop:]
            self._state = (new_exps, new_tokens, new_norms)
        return self

    def extend(self, exps) -> "MemoryBank":
        for e in exps:
            self.insert(e)
        return self

    def similarities(self, query) -> np.ndarray:
        _, tokens, norms = self._state
        q = np.asarray(query, dtype=float).reshape(-1)
        nq = np.linalg.norm(q)
        if nq == 0.0:
            raise ValueError("query token is zero")
        if len(tokens) == 0:
            return np.zeros(0)
        if np.any(norms == 0.0):
            raise ValueError("bank contains a zero token")
        # row-wise einsum: identical tokens get bit-identical scores (BLAS gemv may not)
        return np.einsum("ij,j->i", tokens, q) / (norms * nq)

    def retrieve(self, query, k: int) -> list[tuple[Experience, float]]:
        """Top-``k`` experiences by cosine similarity, ties to the earliest inserted."""
        if k < 0:
            raise ValueError("k must be >= 0")
        exps, _, _ = self._state
        if k == 0 or not exps:
            return []
        sims = self.similarities(query)
        order = np.argsort(-sims, kind="stable")[: min(k, len(exps))]
        return [(exps[i], float(sims[i])) for i in order]

    def stats(self) -> dict:
        exps = self.experiences
        return {
            "size": len(exps),
            "decisions": dict(sorted(Counter(e.decision.value for e in exps).items())),
            "provenance": {p: sum(e.provenance == p for e in exps) for p in PROVENANCES},
        }

    def copy(self) -> "MemoryBank":
        return MemoryBank(self.experiences, self.capacity)


def retrieve_topk(bank: MemoryBank, query, k: int) -> list[Experience]:
    return [e for e, _ in bank.retrieve(query, k)]


def bank_insert(bank: MemoryBank, exp: Experience) -> MemoryBank:
    return bank.insert(exp)


def violates_hard_rules(exp: Experience) -> bool:
    """Decisions the traffic rules forbid outright.

    Accelerating or changing lanes while the nearest critical object is a
    red/yellow light or a crossing pedestrian.
    """
    nearest = exp.description.nearest
    if nearest is None or exp.decision not in (MetaAction.AC, MetaAction.LCL, MetaAction.LCR):
        return False
    if nearest.category == "traffic_light" and nearest.state in ("red", "yellow"):
        return True
    return nearest.category == "pedestrian" and nearest.lane_relation == "crossing"


def bank_revise(bank: MemoryBank) -> MemoryBank:
    """Drop exact (token, decision) duplicates, keeping the newest, and rule violations."""
    seen = set()
    keep = []
    for exp in reversed(bank.experiences):
        key = (exp.token.tobytes(), exp.decision)
        if key in seen or violates_hard_rules(exp):
            continue
        seen.add(key)
        keep.append(exp)
    return MemoryBank(reversed(keep), bank.capacity)


def persist(bank: MemoryBank, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w") as fh:
            for exp in bank.experiences:
                fh.write(json.dumps(exp.to_dict()) + "\n")
        tmp.replace(path)
    except OSError as exc:
        raise BankIOError(f"could not write bank to {path}: {exc}") from exc


def load(path, strict: bool = True) -> MemoryBank:
    """Read a JSONL bank. With ``strict=False`` corrupt lines are skipped and counted."""
    bank, _ = load_with_errors(path, strict)
    return bank


def load_with_errors(path, strict: bool = False) -> tuple[MemoryBank, int]:
    path = Path(path)
    exps, bad = [], 0
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    exps.append(Experience.from_dict(json.loads(line)))
                except (ValueError, KeyError, TypeError) as exc:
                    if strict:
                        raise BankIOError(f"{path}:{lineno}: corrupt experience record: {exc}") from exc
                    bad += 1
    except OSError as exc:
        raise BankIOError(f"could not read bank {path}: {exc}") from exc
    return MemoryBank(exps), bad
