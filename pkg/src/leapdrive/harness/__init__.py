"""Closed-loop episodes, metrics, reflection rounds, ablations and the CLI."""

from .banktool import bank_stats, export_bank, import_bank, subsample_bank
from .config import DEFAULT_PENALTIES, ConfigError, EpisodeConfig
from .episode import EpisodeReport, EpisodeResult, accident_of, resolve_scenario, run_episode
from .loops import (
    CSV_FIELDS, AblationRow, collect_experiences, read_csv, run_ablation, run_reflection_loop, subsample, write_csv,
)
from .metrics import EpisodeLog, Metrics, compute_metrics
from .scenarios import BUILTINS, builtin, clean_straight, lead_brake, random_traffic

__all__ = [
    "BUILTINS", "CSV_FIELDS", "DEFAULT_PENALTIES", "AblationRow", "ConfigError", "EpisodeConfig", "EpisodeLog",
    "EpisodeReport", "EpisodeResult", "Metrics", "accident_of", "bank_stats", "builtin", "clean_straight",
    "collect_experiences", "compute_metrics", "export_bank", "import_bank", "lead_brake", "random_traffic",
    "read_csv", "resolve_scenario", "run_ablation", "run_episode", "run_reflection_loop", "subsample",
    "subsample_bank", "write_csv",
]
