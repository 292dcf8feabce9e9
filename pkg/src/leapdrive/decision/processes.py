"""Analytic (slow) and heuristic (fast) decision processes."""

from __future__ import annotations

from ..perception.describe import SceneDescription
from .actions import MetaAction, parse_decision
from .backends import ReasonerBackend
from .context import DecisionContext, EgoStatus, NavigationHint
from .memory import Experience, MemoryBank

DEFAULT_K = 3


def analytic_decide(backend: ReasonerBackend, rules: str, description: SceneDescription,
                    navigation: NavigationHint, ego: EgoStatus) -> tuple[str, MetaAction]:
    """Reason from the traffic rules alone. Raises InvalidDecision or BackendError."""
    ctx = DecisionContext(rules=rules, description=description, navigation=navigation, ego=ego)
    return parse_decision(backend.decide(ctx))


def heuristic_decide(backend: ReasonerBackend, rules: str, shots, description: SceneDescription,
                     navigation: NavigationHint, ego: EgoStatus,
                     similarities=None) -> tuple[str, MetaAction]:
    """Decide with few-shot experiences (most similar first) prepended to the context.

    With no shots this is exactly the zero-shot call.
    """
    shots = tuple(shots)
    sims = tuple(similarities) if similarities is not None else ()
    if sims and len(sims) != len(shots):
        raise ValueError("one similarity per shot")
    ctx = DecisionContext(rules=rules, description=description, navigation=navigation, ego=ego,
                          shots=shots, similarities=sims)
    return parse_decision(backend.decide(ctx))


def retrieve_and_decide(backend: ReasonerBackend, rules: str, bank: MemoryBank, token, k: int,
                        description: SceneDescription, navigation: NavigationHint,
                        ego: EgoStatus) -> tuple[str, MetaAction, list[tuple[Experience, float]]]:
    hits = bank.retrieve(token, k)
    reasoning, action = heuristic_decide(backend, rules, [e for e, _ in hits], description, navigation, ego,
                                         [s for _, s in hits])
    return reasoning, action, hits
