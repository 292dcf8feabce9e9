import json

import numpy as np
import pytest

from leapdrive.harness.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_run_writes_report(tmp_path, capsys):
    code, out = run(capsys, "run", "--scenario", "builtin:straight:30", "--out-dir", str(tmp_path))
    assert code == 0
    summary = json.loads(out.out)
    assert summary["DS"] == 100.0
    assert list(tmp_path.glob("*.report.json"))


def test_bad_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "c.yaml"
    bad.write_text("k: -2\n")
    code, _ = run(capsys, "run", "--config", str(bad), "--out-dir", str(tmp_path))
    assert code == 1


def test_missing_bank_exits_one(tmp_path, capsys):
    code, _ = run(capsys, "bank", "stats", str(tmp_path / "nope.jsonl"))
    assert code == 1


def test_bank_tools(tmp_path, capsys):
    bank = tmp_path / "b.jsonl"
    code, _ = run(capsys, "collect", "--episodes", "2", "--out", str(bank))
    assert code == 0
    code, out = run(capsys, "bank", "stats", str(bank))
    assert code == 0
    size = json.loads(out.out)["size"]
    assert size > 0

    code, _ = run(capsys, "bank", "subsample", str(bank), str(tmp_path / "s.jsonl"), "--size", "5", "--seed", "1")
    assert code == 0
    assert len((tmp_path / "s.jsonl").read_text().splitlines()) == 5

    code, _ = run(capsys, "bank", "export", str(bank), str(tmp_path / "e.jsonl"))
    assert code == 0

    # a corrupt line is skipped and reported with exit code 2
    with bank.open("a") as fh:
        fh.write("{not json\n")
    code, out = run(capsys, "bank", "stats", str(bank))
    assert code == 2
    assert json.loads(out.out)["size"] == size
    assert "corrupt" in out.err


def test_encoder_commands(tmp_path, capsys):
    from leapdrive.encoder import save_dataset, synthetic_dataset

    save_dataset(synthetic_dataset(60, seed=1), tmp_path / "train.jsonl")
    save_dataset(synthetic_dataset(20, seed=2), tmp_path / "query.jsonl")
    w = tmp_path / "w.npz"
    code, out = run(capsys, "train-encoder", "--data", str(tmp_path / "train.jsonl"), "--epochs", "1",
                    "--out", str(w))
    assert code == 0 and w.exists()
    assert len(json.loads(out.out)["epoch_loss"]) == 1

    code, _ = run(capsys, "encode", "--weights", str(w), "--data", str(tmp_path / "query.jsonl"),
                  "--out", str(tmp_path / "t.npy"))
    assert code == 0
    tokens = np.load(tmp_path / "t.npy")
    assert tokens.shape == (20, 256)

    code, out = run(capsys, "eval-precision", "--weights", str(w), "--train", str(tmp_path / "train.jsonl"),
                    "--query", str(tmp_path / "query.jsonl"))
    assert code == 0
    res = json.loads(out.out)
    assert 0.0 <= res["steer"] <= 1.0


def test_reflect_loop(tmp_path, capsys):
    bank = tmp_path / "b.jsonl"
    bank.write_text("")
    code, out = run(capsys, "reflect-loop", "--scenario", "builtin:lead_brake", "--mode", "heuristic", "--k", "3",
                    "--bank", str(bank), "--rounds", "1", "--out-dir", str(tmp_path / "runs"))
    assert code == 0
    rounds = json.loads(out.out)
    assert len(rounds) == 2
    assert rounds[0]["DS"] < rounds[1]["DS"]
    assert len(bank.read_text().splitlines()) == 1


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["fly"])
