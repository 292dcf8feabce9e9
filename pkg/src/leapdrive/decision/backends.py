"""Reasoning backends: a deterministic rule table, a retrieval follower and a chat adapter.

Every backend answers in text ending with a ``Decision: <ACTION>`` line; the
processes parse that line, so all backends share one validation path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Protocol

from ..chat import ChatClient, ChatError, ChatTimeout
from ..perception.describe import SceneDescription
from .actions import CAUTION, MetaAction, parse_decision
from .context import DecisionContext, EgoStatus, NavigationHint, ReflectionContext

ROAD_USERS = ("vehicle", "cyclist", "pedestrian", "static")


class BackendError(RuntimeError):
    """Typed backend failure (transport, timeout, refusal)."""


class BackendTimeout(BackendError):
    pass


class ReasonerBackend(Protocol):
    name: str

    def decide(self, context: DecisionContext) -> str: ...

    def reflect(self, context: ReflectionContext) -> str: ...


@dataclass(frozen=True)
class RuleThresholds:
    stop_range: float = 25.0  # m, red/yellow light or stop sign
    stop_sign_served: float = 5.0  # m, a stop sign this close counts as served
    ttc: float = 3.0  # s
    min_gap: float = 8.0  # m
    front_gap: float = 15.0  # m, lane change
    rear_gap: float = 10.0  # m, lane change
    speed_margin: float = 1.0  # m/s below target before accelerating
    overspeed: float = 1.5  # m/s above target before slowing down
    clear_range: float = 30.0  # m, no lead closer than this counts as clear

    def to_dict(self) -> dict:
        return asdict(self)


# zero-shot behaviour of the fast process: reacts late to lead vehicles
REACTIVE = RuleThresholds(ttc=1.0, min_gap=5.0, clear_range=15.0)


def rule_table(desc: SceneDescription, nav: NavigationHint, ego: EgoStatus,
               th: RuleThresholds = RuleThresholds()) -> tuple[str, MetaAction]:
    """Priority table: STOP > DC > lane change > AC > IDLE. Total over descriptions."""
    ahead = [o for o in desc.objects if o.ahead > 0]
    for o in ahead:
        if o.category == "traffic_light" and o.state in ("red", "yellow") and o.distance <= th.stop_range:
            return f"{o.state} light {o.distance:.1f} m ahead, must stop at the stop line", MetaAction.STOP
        if o.category == "stop_sign" and th.stop_sign_served < o.distance <= th.stop_range:
            return f"stop sign {o.distance:.1f} m ahead, must stop at the stop line", MetaAction.STOP
        if o.category == "pedestrian" and o.lane_relation == "crossing":
            return f"pedestrian {o.id} crossing the path {o.distance:.1f} m ahead, yield", MetaAction.STOP

    lead = desc.lead()
    if lead is not None and lead.ttc < th.ttc:
        return f"lead {lead.category} {lead.id} time to collision {lead.ttc:.1f} s, keep safe distance", MetaAction.DC
    if lead is not None and lead.distance < th.min_gap:
        return f"lead {lead.category} {lead.id} only {lead.distance:.1f} m ahead, increase the gap", MetaAction.DC
    if ego.speed > nav.target_speed + th.overspeed:
        return f"speed {ego.speed:.1f} m/s above target {nav.target_speed:.1f} m/s", MetaAction.DC

    if nav.maneuver in ("lane_change_left", "lane_change_right"):
        side = "left" if nav.maneuver == "lane_change_left" else "right"
        action = MetaAction.LCL if side == "left" else MetaAction.LCR
        users = [o for o in desc.objects if o.lane_relation == side and o.category in ROAD_USERS]
        front = min((o.distance for o in users if o.ahead > 0), default=math.inf)
        rear = min((o.distance for o in users if o.ahead <= 0), default=math.inf)
        if front >= th.front_gap and rear >= th.rear_gap:
            return f"navigation asks for the {side} lane and the gap is free", action

    blocking = [o for o in ahead if o.category in ("traffic_light", "stop_sign") and o.state != "green"]
    blocking += [o for o in ahead if o.lane_relation == "crossing"]
    clear = not blocking and (lead is None or lead.distance > th.clear_range or lead.trend == "receding")
    if ego.speed < nav.target_speed - th.speed_margin and clear:
        return f"road ahead is clear and speed {ego.speed:.1f} m/s is below target {nav.target_speed:.1f} m/s", MetaAction.AC
    if not desc.objects:
        return "no critical objects, keep speed and lane", MetaAction.IDLE
    return f"nearest critical object is {desc.objects[0].category} {desc.objects[0].id}, keep speed and lane", MetaAction.IDLE


def format_answer(reasoning: str, action: MetaAction) -> str:
    return f"Reasoning: {reasoning}\nDecision: {action.value}"


def find_erroneous_step(context: ReflectionContext, th: RuleThresholds = RuleThresholds()):
    """Earliest step where the rule table asks for a more cautious action."""
    for i, rec in enumerate(context.steps, 1):
        nav = NavigationHint(**rec.context["navigation"]) if "navigation" in rec.context else NavigationHint()
        ego = EgoStatus(**rec.context["ego"]) if "ego" in rec.context else EgoStatus(rec.description.ego.speed)
        reasoning, action = rule_table(rec.description, nav, ego, th)
        if CAUTION[action] > CAUTION[rec.decision]:
            return i, reasoning, action
    return None


class RuleOracle:
    """Deterministic stand-in for the slow reasoning model."""

    name = "rule_oracle"

    def __init__(self, thresholds: RuleThresholds = RuleThresholds()):
        self.thresholds = thresholds

    def decide(self, context: DecisionContext) -> str:
        return format_answer(*rule_table(context.description, context.navigation, context.ego, self.thresholds))

    def reflect(self, context: ReflectionContext) -> str:
        found = find_erroneous_step(context, self.thresholds)
        if found is None:
            return "Step: none\nReasoning: no step disagrees with the traffic rules\nDecision: DC"
        i, reasoning, action = found
        original = context.steps[i - 1].decision.value
        return f"Step: {i}\nReasoning: {reasoning}; should {action.value} at time step {i} instead of {original}\nDecision: {action.value}"


class ExperienceFollower:
    """Built-in fast backend.

    Decides with a late-reacting rule table, then defers to the top few-shot
    experience when it is similar enough and at least as cautious. Past
    experience can make it more careful but never talks it out of a stop.
    """

    name = "experience_follower"

    def __init__(self, follow_threshold: float = 0.97, thresholds: RuleThresholds = REACTIVE):
        self.follow_threshold = follow_threshold
        self.thresholds = thresholds

    def decide(self, context: DecisionContext) -> str:
        reasoning, action = rule_table(context.description, context.navigation, context.ego, self.thresholds)
        if context.shots:
            sim = context.similarities[0] if context.similarities else 1.0
            top = context.shots[0]
            if sim >= self.follow_threshold and CAUTION[top.decision] >= CAUTION[action]:
                return format_answer(f"similar to a past experience ({sim:.3f}): {top.reasoning}", top.decision)
        return format_answer(reasoning, action)

    def reflect(self, context: ReflectionContext) -> str:
        return RuleOracle().reflect(context)


class ExternalChat:
    """Wire adapter to a JSON-over-HTTP chat model."""

    name = "external_chat"

    def __init__(self, client: ChatClient | None = None):
        self.client = client or ChatClient()

    def _call(self, system: str, content: str) -> str:
        try:
            return self.client.complete(system, [{"role": "user", "content": content}])
        except ChatTimeout as exc:
            raise BackendTimeout(str(exc)) from exc
        except ChatError as exc:
            raise BackendError(str(exc)) from exc

    def decide(self, context: DecisionContext) -> str:
        return self._call(context.rules, context.render())

    def reflect(self, context: ReflectionContext) -> str:
        return self._call(context.prompt + "\n\n" + context.rules, context.render())


def make_backend(name: str, **kwargs) -> ReasonerBackend:
    if name == "rule_oracle":
        return RuleOracle(**kwargs)
    if name == "experience_follower":
        return ExperienceFollower(**kwargs)
    if name == "external_chat":
        return ExternalChat(**kwargs)
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "BackendError", "BackendTimeout", "ExperienceFollower", "ExternalChat", "REACTIVE", "ReasonerBackend",
    "RuleOracle", "RuleThresholds", "find_erroneous_step", "format_answer", "make_backend", "parse_decision",
    "rule_table",
]
