from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..perception.describe import SceneDescription
from .actions import MetaAction

HISTORY_LENGTH = 10


@dataclass(frozen=True)
class HistoryRecord:
    token: np.ndarray
    description: SceneDescription
    reasoning: str
    decision: MetaAction
    tick: int = 0
    # navigation hint and ego state at decision time, for re-evaluation during reflection
    context: dict = field(default_factory=dict, compare=False)


class HistoryQueue(deque):
    """Most recent decision records, oldest first, at most ``HISTORY_LENGTH``."""

    def __init__(self, records=(), maxlen: int = HISTORY_LENGTH):
        super().__init__(records, maxlen=maxlen)


def push_history(queue: HistoryQueue, record: HistoryRecord) -> HistoryQueue:
    queue.append(record)
    return queue
