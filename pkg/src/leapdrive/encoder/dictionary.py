"""FIFO key dictionary of momentum-encoded tokens with their control labels."""

from __future__ import annotations

import logging

import numpy as np

from .config import TOKEN_DIM

log = logging.getLogger(__name__)


class KeyDictionary:
    def __init__(self, capacity: int = 4096, dim: int = TOKEN_DIM):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.dim = dim
        self._tokens = np.zeros((capacity, dim))
        self._steer = np.zeros(capacity)
        self._brake = np.zeros(capacity)
        self._ids = np.zeros(capacity, dtype=np.int64)
        self._start = 0
        self._size = 0
        self._next_id = 0

    def __len__(self) -> int:
        return self._size

    def _order(self) -> np.ndarray:
        return (self._start + np.arange(self._size)) % self.capacity

    @property
    def tokens(self) -> np.ndarray:
        return self._tokens[self._order()]

    @property
    def steer(self) -> np.ndarray:
        return self._steer[self._order()]

    @property
    def brake(self) -> np.ndarray:
        return self._brake[self._order()]

    @property
    def ids(self) -> np.ndarray:
        """Insertion serial numbers, oldest first."""
        return self._ids[self._order()]

    def push(self, tokens, steer, brake) -> "KeyDictionary":
        """Append a batch, evicting oldest entries beyond capacity (in place)."""
        tokens = np.atleast_2d(np.asarray(tokens, dtype=float))
        steer = np.atleast_1d(np.asarray(steer, dtype=float))
        brake = np.atleast_1d(np.asarray(brake, dtype=float))
        n = tokens.shape[0]
        ids = self._next_id + np.arange(n)
        self._next_id += n
        if n > self.capacity:
            log.warning("batch of %d exceeds dictionary capacity %d; keeping the newest entries", n, self.capacity)
            tokens, steer, brake, ids = tokens[-self.capacity:], steer[-self.capacity:], brake[-self.capacity:], ids[-self.capacity:]
            n = self.capacity
        end = (self._start + self._size) % self.capacity
        slots = (end + np.arange(n)) % self.capacity
        self._tokens[slots] = tokens
        self._steer[slots] = steer
        self._brake[slots] = brake
        self._ids[slots] = ids
        overflow = max(0, self._size + n - self.capacity)
        self._start = (self._start + overflow) % self.capacity
        self._size = min(self.capacity, self._size + n)
        return self


def dict_push(dictionary: KeyDictionary, tokens, steer, brake) -> KeyDictionary:
    return dictionary.push(tokens, steer, brake)
