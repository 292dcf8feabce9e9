"""Bank maintenance: export, import, stats and seeded subsampling of JSONL banks."""

from __future__ import annotations

import logging
from pathlib import Path

from ..decision import MemoryBank, load_with_errors, persist
from .loops import subsample

log = logging.getLogger(__name__)


def _read(path) -> tuple[MemoryBank, int]:
    bank, bad = load_with_errors(path, strict=False)
    if bad:
        log.warning("%s: skipped %d corrupt record(s)", path, bad)
    return bank, bad


def export_bank(bank_path, out_path) -> int:
    """Copy the readable records of a bank; returns the number of corrupt records skipped."""
    bank, bad = _read(bank_path)
    persist(bank, out_path)
    return bad


def import_bank(src_path, bank_path) -> tuple[int, int]:
    """Append the records of ``src_path`` to ``bank_path``; returns (added, skipped)."""
    incoming, bad = _read(src_path)
    if Path(bank_path).exists():
        bank, bad_existing = _read(bank_path)
        bad += bad_existing
    else:
        bank = MemoryBank()
    bank.extend(incoming.experiences)
    persist(bank, bank_path)
    return len(incoming), bad


def bank_stats(bank_path) -> tuple[dict, int]:
    bank, bad = _read(bank_path)
    stats = bank.stats()
    stats["corrupt"] = bad
    return stats, bad


def subsample_bank(bank_path, size: int, seed: int, out_path) -> int:
    bank, bad = _read(bank_path)
    persist(subsample(bank, size, seed), out_path)
    return bad
