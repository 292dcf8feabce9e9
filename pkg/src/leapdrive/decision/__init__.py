"""Dual-process decision core: memory bank, analytic and heuristic processes, reflection."""

from .actions import CAUTION, InvalidDecision, MetaAction, parse_decision, parse_step
from .backends import (
    REACTIVE, BackendError, BackendTimeout, ExperienceFollower, ExternalChat, ReasonerBackend, RuleOracle,
    RuleThresholds, find_erroneous_step, format_answer, make_backend, rule_table,
)
from .context import MANEUVERS, DecisionContext, EgoStatus, NavigationHint, ReflectionContext
from .history import HISTORY_LENGTH, HistoryQueue, HistoryRecord, push_history
from .memory import (
    BankIOError, Experience, MemoryBank, bank_insert, bank_revise, cosine, load, load_with_errors, persist,
    retrieve_topk, violates_hard_rules,
)
from .processes import DEFAULT_K, analytic_decide, heuristic_decide, retrieve_and_decide
from .prompts import PromptSet, text_hash
from .reflection import ReflectionError, fallback_action, reflect

__all__ = [
    "BackendError", "BackendTimeout", "BankIOError", "CAUTION", "DEFAULT_K", "DecisionContext", "EgoStatus",
    "Experience", "ExperienceFollower", "ExternalChat", "HISTORY_LENGTH", "HistoryQueue", "HistoryRecord",
    "InvalidDecision", "MANEUVERS", "MemoryBank", "MetaAction", "NavigationHint", "PromptSet", "REACTIVE",
    "ReasonerBackend", "ReflectionContext", "ReflectionError", "RuleOracle", "RuleThresholds",
    "analytic_decide", "bank_insert", "bank_revise", "cosine", "fallback_action", "find_erroneous_step",
    "format_answer", "heuristic_decide", "load", "load_with_errors", "make_backend", "parse_decision",
    "parse_step", "persist", "push_history", "reflect", "retrieve_and_decide", "retrieve_topk",
    "rule_table", "text_hash", "violates_hard_rules",
]
