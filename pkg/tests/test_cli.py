"""Command-line interface: subcommands, config merging, exit codes."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from arffkit.cli import main
from arffkit.serialize import read_csv_columns


def _run(args, cwd):
    return subprocess.run([sys.executable, "-m", "arffkit.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_version_flag(tmp_path):
    out = _run(["--version"], tmp_path)
    assert out.returncode == 0
    assert out.stdout.strip()


def test_gen_data_then_train(tmp_path):
    r = _run(["gen-data", "--size", "120", "--out", "data.npz",
              "--normalize", "--csv", "--master-seed", "3"], tmp_path)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "data.npz").exists()
    assert (tmp_path / "data.csv").exists()

    r = _run(["train", "--k", "6", "--delta", "0.5", "--iterations", "8",
              "--data", "data.npz", "--out", "run", "--master-seed", "5",
              "--test-size", "40"], tmp_path)
    assert r.returncode == 0, r.stderr
    trace = read_csv_columns(tmp_path / "run" / "trace.csv")
    assert len(trace["iter"]) == 8
    assert np.all(np.isfinite(trace["train_err"]))
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["config"]["n_features"] == 6
    assert (tmp_path / "run" / "model.json").exists()


def test_train_is_deterministic_across_processes(tmp_path):
    for d in ("r1", "r2"):
        r = _run(["train", "--k", "5", "--delta", "0.5", "--iterations", "6",
                  "--size", "100", "--out", d, "--master-seed", "9"], tmp_path)
        assert r.returncode == 0, r.stderr
    b1 = (tmp_path / "r1" / "trace.csv").read_bytes()
    b2 = (tmp_path / "r2" / "trace.csv").read_bytes()
    assert b1 == b2


def test_config_file_with_flag_override(tmp_path):
    cfg = {"k_values": [4], "deltas": [0.5], "n_iterations": 3,
           "realizations": 2, "test_size": 20}
    (tmp_path / "sweep.json").write_text(json.dumps(cfg))
    r = _run(["stats", "--config", "sweep.json", "--out", "st",
              "--master-seed", "7", "--realizations", "1"], tmp_path)
    assert r.returncode == 0, r.stderr
    manifest = json.loads((tmp_path / "st" / "manifest.json").read_text())
    # the flag overrides the config file's realizations: 2 -> 1
    assert {run["realization"] for run in manifest["runs"]} == {0}


def test_invalid_config_exits_2_with_json(tmp_path):
    r = _run(["stats", "--k-values", "4", "--deltas", "0.5"], tmp_path)
    assert r.returncode == 2
    err = json.loads(r.stderr)
    assert err["error"]["kind"] == "ConfigError"
    assert "out" in err["error"]["message"]

    (tmp_path / "bad.json").write_text('{"no_such_option": 1}')
    r = _run(["stats", "--config", "bad.json", "--out", "x"], tmp_path)
    assert r.returncode == 2
    assert json.loads(r.stderr)["error"]["kind"] == "ConfigError"

    r = _run(["train", "--k", "6", "--delta", "0.5", "--variant", "bogus",
              "--out", "x"], tmp_path)
    assert r.returncode == 2  # argparse rejects the choice


def test_kde_of_csv_column(tmp_path):
    rows = ["value"] + [repr(float(v)) for v in
                        np.random.default_rng(0).standard_normal(500)]
    (tmp_path / "samples.csv").write_text("\n".join(rows) + "\n")
    r = _run(["kde", "--input", "samples.csv", "--column", "value",
              "--out", "density.csv", "--grid-cells", "101"], tmp_path)
    assert r.returncode == 0, r.stderr
    table = read_csv_columns(tmp_path / "density.csv")
    assert len(table["grid"]) == 101
    assert np.all(table["density"] >= 0)

    r = _run(["kde", "--input", "samples.csv", "--column", "missing",
              "--out", "d.csv"], tmp_path)
    assert r.returncode == 2
    assert "missing" in json.loads(r.stderr)["error"]["message"]


def test_report_digest(tmp_path):
    r = _run(["sweep", "--kind", "test4_batch", "--k-values", "4",
              "--deltas", "0.5", "--batch-sizes", "12", "--iterations", "3",
              "--realizations", "1", "--test-size", "20", "--out", "sw",
              "--master-seed", "1"], tmp_path)
    assert r.returncode == 0, r.stderr
    r = _run(["report", "--dir", "sw", "--out", "digest.json"], tmp_path)
    assert r.returncode == 0, r.stderr
    digest = json.loads(r.stdout)
    assert digest["kind"] == "test4_batch"
    assert digest["runs"] == 2  # am and rw-r
    assert len(digest["groups"]) == 2
    assert json.loads((tmp_path / "digest.json").read_text()) == digest

    r = _run(["report", "--dir", "not_there"], tmp_path)
    assert r.returncode == 2


def test_main_callable_in_process(tmp_path):
    # the entry point is importable and returns instead of exiting
    rc = main(["gen-data", "--size", "30",
               "--out", str(tmp_path / "d.npz"), "--master-seed", "1"])
    assert rc == 0
    assert (tmp_path / "d.npz").exists()


def test_missing_subcommand_exits_2(tmp_path):
    r = _run([], tmp_path)
    assert r.returncode == 2
