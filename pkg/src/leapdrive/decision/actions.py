from __future__ import annotations

import re
from enum import Enum


class MetaAction(str, Enum):
    AC = "AC"
    DC = "DC"
    LCL = "LCL"
    LCR = "LCR"
    IDLE = "IDLE"
    STOP = "STOP"

    def __str__(self) -> str:
        return self.value


# higher is more cautious; used to decide whether a correction is a safety fix
CAUTION = {MetaAction.AC: 0, MetaAction.LCL: 1, MetaAction.LCR: 1, MetaAction.IDLE: 1, MetaAction.DC: 2, MetaAction.STOP: 3}

_DECISION_LINE = re.compile(r"^\s*decision\s*:\s*[\"'`]*([A-Za-z]+)[\"'`.]*\s*$", re.IGNORECASE | re.MULTILINE)
_STEP_LINE = re.compile(r"^\s*step\s*:\s*(\S+)\s*$", re.IGNORECASE | re.MULTILINE)
_REASONING_LINE = re.compile(r"^\s*reasoning\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)


class InvalidDecision(ValueError):
    """Backend output without a valid ``Decision: <ACTION>`` line; keeps the raw text."""

    def __init__(self, raw: str, reason: str = "no valid 'Decision: <ACTION>' line"):
        self.raw = raw
        super().__init__(f"{reason}: {raw[:200]!r}")


def parse_decision(text: str) -> tuple[str, MetaAction]:
    """Split backend output into ``(reasoning, action)``; the last Decision line wins."""
    matches = _DECISION_LINE.findall(text)
    if not matches:
        raise InvalidDecision(text)
    token = matches[-1].upper()
    try:
        action = MetaAction(token)
    except ValueError:
        raise InvalidDecision(text, f"unknown meta-action {token!r}") from None
    m = _REASONING_LINE.search(text)
    if m:
        reasoning = m.group(1).strip()
    else:
        reasoning = _DECISION_LINE.sub("", text).strip()
    return reasoning, action


def parse_step(text: str) -> int | None:
    """Step index from a ``Step: <n>`` line; ``None`` when absent or ``none``."""
    m = _STEP_LINE.search(text)
    if not m:
        return None
    try:
        return int(m.group(1))
    except ValueError:
        return None
