"""Multi-episode drivers: reflection rounds, experience collection and the ablation grid."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..decision import MemoryBank
from .config import EpisodeConfig
from .episode import EpisodeReport, run_episode

log = logging.getLogger(__name__)

CSV_FIELDS = ("k", "size", "RC", "IS", "DS", "seed")


def run_reflection_loop(config: EpisodeConfig, rounds: int, bank: MemoryBank | None = None,
                        out_dir=None) -> tuple[list[EpisodeReport], MemoryBank]:
    """Repeat the same seeded episode; each round starts from the bank grown by earlier reflections.

    ``rounds`` counts the re-runs after the first episode, so ``rounds=0`` is one plain episode.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if not config.reflection:
        raise ValueError("reflection loop needs reflection enabled in the config")
    reports = []
    for r in range(rounds + 1):
        cfg = config.with_(episode_id=f"{config.episode_id}-r{r}") if rounds else config
        result = run_episode(cfg, bank=bank, out_dir=out_dir)
        reports.append(result.report)
        bank = result.bank
        log.info("round %d: DS %.2f, %d reflection(s), bank size %d", r, result.report.DS,
                 result.report.reflections, len(bank))
    return reports, bank


def collect_experiences(config: EpisodeConfig, scenarios, target: int | None = None) -> MemoryBank:
    """Run analytic episodes over ``scenarios`` until the bank holds ``target`` experiences."""
    bank = MemoryBank()
    for i, scn in enumerate(scenarios):
        cfg = config.with_(scenario=scn, mode="analytic", episode_id=f"collect-{i}")
        bank = run_episode(cfg, bank=bank).bank
        if target is not None and len(bank) >= target:
            break
    return bank


def subsample(bank: MemoryBank, size: int, seed: int) -> MemoryBank:
    """Seeded subset of ``size`` experiences in their original insertion order."""
    if size > len(bank):
        warnings.warn(f"requested {size} experiences from a bank of {len(bank)}; using all", stacklevel=2)
        size = len(bank)
    idx = np.sort(np.random.default_rng(seed).choice(len(bank), size=size, replace=False))
    return MemoryBank([bank[i] for i in idx], bank.capacity)


@dataclass(frozen=True)
class AblationRow:
    k: int
    size: int
    RC: float
    IS: float
    DS: float
    seed: int


def run_ablation(config: EpisodeConfig, bank: MemoryBank, ks, sizes, seeds=(0,), csv_path=None) -> list[AblationRow]:
    """Few-shot ``k`` x bank-size grid in heuristic mode, one row per (seed, size, k).

    ``config.scenario`` may contain ``{seed}``, filled per seed.
    """
    rows = []
    for seed in seeds:
        scenario = config.scenario.format(seed=seed) if isinstance(config.scenario, str) else config.scenario
        for size in sizes:
            sub = subsample(bank, size, seed)
            for k in ks:
                cfg = config.with_(scenario=scenario, mode="heuristic", k=k, seed=seed, reflection=False,
                                   bank_path=config.bank_path or "<in-memory>",
                                   episode_id=f"ablate-s{seed}-n{size}-k{k}")
                rep = run_episode(cfg, bank=sub).report
                rows.append(AblationRow(k, len(sub), rep.RC, rep.IS, rep.DS, seed))
                log.info("seed %d size %d k %d: DS %.2f", seed, len(sub), k, rep.DS)
    if csv_path is not None:
        write_csv(rows, csv_path)
    return rows


def write_csv(rows, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow([r.k, r.size, repr(r.RC), repr(r.IS), repr(r.DS), r.seed])


def read_csv(path) -> list[AblationRow]:
    with open(path, newline="") as fh:
        return [
            AblationRow(int(r["k"]), int(r["size"]), float(r["RC"]), float(r["IS"]), float(r["DS"]), int(r["seed"]))
            for r in csv.DictReader(fh)
        ]
