"""Command line entry point: episodes, reflection rounds, ablations, banks and the encoder."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..decision import MemoryBank, load, persist
from ..encoder import (
    EncoderConfig, EncoderParams, encode_records, load_dataset, load_params, precision_at_k, save_dataset,
    save_params, synthetic_dataset, train,
)
from .banktool import bank_stats, export_bank, import_bank, subsample_bank
from .config import ConfigError, EpisodeConfig
from .episode import run_episode
from .loops import run_ablation, run_reflection_loop
from .scenarios import random_traffic

log = logging.getLogger("leapdrive")


def _episode_config(args) -> EpisodeConfig:
    cfg = EpisodeConfig.from_file(args.config) if args.config else EpisodeConfig()
    changes = {}
    for name in ("scenario", "mode", "k", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    if getattr(args, "bank", None):
        changes["bank_path"] = args.bank
    if getattr(args, "reflection", False):
        changes["reflection"] = True
    if getattr(args, "encoder", None):
        changes["encoder_weights"] = args.encoder
    return cfg.with_(**changes) if changes else cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, default=float))


def cmd_run(args) -> int:
    cfg = _episode_config(args)
    out = _out_dir(args)
    result = run_episode(cfg, out_dir=out)
    if args.save_bank and cfg.bank_path:
        persist(result.bank, cfg.bank_path)
    if args.training_out:
        save_dataset(result.training, args.training_out)
    rep = result.report
    _print({"RC": rep.RC, "IS": rep.IS, "DS": rep.DS, "termination": rep.termination, "timeout": rep.timeout,
            "infractions": [i["kind"] for i in rep.infractions], "bank_inserted": rep.bank_inserted})
    return 0


def cmd_reflect_loop(args) -> int:
    cfg = _episode_config(args).with_(reflection=True)
    out = _out_dir(args)
    bank = load(cfg.bank_path) if cfg.bank_path and Path(cfg.bank_path).exists() else MemoryBank()
    reports, bank = run_reflection_loop(cfg, args.rounds, bank=bank, out_dir=out)
    if cfg.bank_path:
        persist(bank, cfg.bank_path)
    _print([{"round": i, "RC": r.RC, "IS": r.IS, "DS": r.DS, "reflections": r.reflections}
            for i, r in enumerate(reports)])
    return 0


def cmd_collect(args) -> int:
    """Analytic episodes on seeded random-traffic scenarios: a bank plus encoder training records."""
    cfg = _episode_config(args).with_(mode="analytic")
    bank, records = MemoryBank(), []
    for seed in range(args.first_seed, args.first_seed + args.episodes):
        result = run_episode(cfg.with_(scenario=random_traffic(seed), episode_id=f"collect-{seed}"), bank=bank)
        bank = result.bank
        records.extend(result.training)
    persist(bank, args.out)
    if args.training_out:
        save_dataset(records, args.training_out)
    _print(bank.stats())
    return 0


def cmd_ablate(args) -> int:
    cfg = _episode_config(args)
    out = _out_dir(args)
    bank = load(cfg.bank_path)
    rows = run_ablation(cfg, bank, args.ks, args.sizes, args.seeds, csv_path=out / "ablation.csv")
    _print([r.__dict__ for r in rows])
    return 0


def cmd_bank(args) -> int:
    if args.action == "export":
        bad = export_bank(args.bank, args.out)
    elif args.action == "import":
        added, bad = import_bank(args.src, args.bank)
        _print({"added": added, "skipped": bad})
    elif args.action == "stats":
        stats, bad = bank_stats(args.bank)
        _print(stats)
    else:
        bad = subsample_bank(args.bank, args.size, args.seed, args.out)
    if bad:
        print(f"skipped {bad} corrupt record(s)", file=sys.stderr)
        return 2
    return 0


def _encoder_config(args) -> EncoderConfig:
    cfg = EncoderConfig.from_file(args.config) if args.config else EncoderConfig()
    if args.epochs is not None:
        cfg = EncoderConfig.from_dict({**cfg.to_dict(), "epochs": args.epochs})
    if args.seed is not None:
        cfg = EncoderConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def cmd_train_encoder(args) -> int:
    cfg = _encoder_config(args)
    data = load_dataset(args.data) if args.data else synthetic_dataset(args.synthetic, seed=cfg.seed)
    params, report = train(cfg, data)
    save_params(params, args.out)
    _print(report.to_dict())
    return 0


def cmd_encode(args) -> int:
    params = load_params(args.weights)
    tokens = encode_records(params.online, load_dataset(args.data), params.config)
    np.save(args.out, tokens)
    print(f"wrote {len(tokens)} tokens to {args.out}")
    return 0


def cmd_eval_precision(args) -> int:
    params = load_params(args.weights) if args.weights else EncoderParams.initialise(EncoderConfig())
    train_set, query_set = load_dataset(args.train), load_dataset(args.query)
    t = encode_records(params.online, train_set, params.config)
    q = encode_records(params.online, query_set, params.config)
    res = precision_at_k(t, [r.steer for r in train_set], [r.brake for r in train_set],
                         q, [r.steer for r in query_set], [r.brake for r in query_set], k=args.k)
    _print(res)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leapdrive", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def episode_args(p, out=True):
        p.add_argument("--config", help="episode config (YAML or JSON)")
        p.add_argument("--scenario", help="scenario file or builtin:<name>[:arg]")
        p.add_argument("--mode", choices=("analytic", "heuristic"))
        p.add_argument("--k", type=int)
        p.add_argument("--bank", help="memory bank (JSONL)")
        p.add_argument("--encoder", help="encoder weights (.npz)")
        p.add_argument("--seed", type=int)
        if out:
            p.add_argument("--out-dir", default="runs")

    p = sub.add_parser("run", help="run one episode")
    episode_args(p)
    p.add_argument("--reflection", action="store_true")
    p.add_argument("--save-bank", action="store_true", help="write the updated bank back to --bank")
    p.add_argument("--training-out", help="write encoder training records (JSONL)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reflect-loop", help="repeat an episode with reflection")
    episode_args(p)
    p.add_argument("--rounds", type=int, default=1)
    p.set_defaults(func=cmd_reflect_loop)

    p = sub.add_parser("collect", help="build a bank from analytic random-traffic episodes")
    episode_args(p, out=False)
    p.add_argument("--episodes", type=int, default=40)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--training-out")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("ablate", help="few-shot k x bank size grid")
    episode_args(p)
    p.add_argument("--ks", type=int, nargs="+", default=[0, 1, 3])
    p.add_argument("--sizes", type=int, nargs="+", default=[90, 900])
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bank", help="export, import, stats or subsample a bank")
    bsub = p.add_subparsers(dest="action", required=True)
    b = bsub.add_parser("export")
    b.add_argument("bank")
    b.add_argument("out")
    b = bsub.add_parser("import")
    b.add_argument("src")
    b.add_argument("bank")
    b = bsub.add_parser("stats")
    b.add_argument("bank")
    b = bsub.add_parser("subsample")
    b.add_argument("bank")
    b.add_argument("out")
    b.add_argument("--size", type=int, required=True)
    b.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bank)

    p = sub.add_parser("train-encoder", help="train the scene encoder")
    p.add_argument("--config", help="encoder config (YAML or JSON)")
    p.add_argument("--data", help="training records (JSONL); default is the synthetic set")
    p.add_argument("--synthetic", type=int, default=1000, help="synthetic set size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="weights (.npz)")
    p.set_defaults(func=cmd_train_encoder)

    p = sub.add_parser("encode", help="encode training records into tokens")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="tokens (.npy)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("eval-precision", help="precision@k of label agreement")
    p.add_argument("--weights")
    p.add_argument("--train", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_eval_precision)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
