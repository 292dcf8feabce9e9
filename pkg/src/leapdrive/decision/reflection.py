"""Turn an accident and the recent decision history into one corrected experience."""

from __future__ import annotations

import logging

from ..sim.world import AccidentInfo
from .actions import InvalidDecision, MetaAction, parse_decision, parse_step
from .backends import ReasonerBackend
from .context import ReflectionContext
from .history import HistoryQueue
from .memory import Experience

log = logging.getLogger(__name__)


class ReflectionError(ValueError):
    pass


def fallback_action(kind: str) -> MetaAction:
    return MetaAction.STOP if kind == "red_light_violation" else MetaAction.DC


def reflect(backend: ReasonerBackend, prompt: str, accident: AccidentInfo, queue: HistoryQueue,
            rules: str = "", episode: str = "") -> Experience:
    """Corrected experience for the erroneous step.

    The backend names a step and a corrected action. If it names none, names
    an invalid step, or repeats the original action, the newest step is
    corrected to DC (collisions, off-road) or STOP (red light) and the result
    is flagged as a fallback.
    """
    steps = tuple(queue)
    if not steps:
        raise ReflectionError("cannot reflect on an empty history queue")
    ctx = ReflectionContext(prompt=prompt, rules=rules, accident=accident, steps=steps)
    raw = backend.reflect(ctx)
    step = parse_step(raw)
    reasoning, action = "", None
    try:
        reasoning, action = parse_decision(raw)
    except InvalidDecision:
        log.warning("reflection reply without a decision line: %r", raw[:200])
    fallback = step is None or not 1 <= step <= len(steps) or action is None or action == steps[step - 1].decision
    if fallback:
        rec = steps[-1]
        action = fallback_action(accident.kind)
        reasoning = f"{accident.kind.replace('_', ' ')} followed; should {action.value} instead of {rec.decision.value}"
    else:
        rec = steps[step - 1]
    meta = {
        "accident": accident.to_dict(),
        "corrected_from": rec.decision.value,
        "tick": rec.tick,
        "fallback": fallback,
        "raw": raw,
    }
    meta.update({k: v for k, v in rec.context.items() if k in ("navigation", "ego")})
    return Experience(
        token=rec.token,
        description=rec.description,
        reasoning=reasoning,
        decision=action,
        provenance="reflection",
        created_at=(episode, rec.tick),
        meta=meta,
    )
