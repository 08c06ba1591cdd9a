import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from embedrisk import __version__
from embedrisk.cli import main, reproduce_example43, reproduce_remark62d
from embedrisk.graphs import complete_ary_tree, path_graph, write_edge_list
from embedrisk.learner import DistributionSpec, sample_dataset, save_dataset_csv


def _write(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


BOUNDS_CFG = {
    "graph": {"generator": {"kind": "path", "n": 5}},
    "space": {"kind": "hyperbolic", "dim": 2, "radius": 5.0},
    "gfunc": {"exponent": 1.0, "space_threshold": 3.0},
    "hinge": {"alpha": "inf", "c": 6.0},
    "delta": 0.05,
    "s_grid": [100, 1000],
    "crossover": {"xi": 0.5, "v_min": 2},
}


def test_bounds_command(tmp_path):
    cfg = _write(tmp_path, "c.json", BOUNDS_CFG)
    out = tmp_path / "out"
    assert main(["bounds", "--config", cfg, "--out", str(out)]) == 0
    text = (out / "bounds.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith(f"# embedrisk {__version__} config_sha256=")
    assert lines[1].split(",")[:3] == ["S", "r0", "r_full_solved"]
    assert len(lines) == 4
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["tool_version"] == __version__


def test_bounds_determinism(tmp_path):
    cfg = _write(tmp_path, "c.json", BOUNDS_CFG)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["bounds", "--config", cfg, "--out", str(out1), "--seed", "7"]) == 0
    assert main(["bounds", "--config", cfg, "--out", str(out2), "--seed", "7"]) == 0
    assert (out1 / "bounds.csv").read_bytes() == (out2 / "bounds.csv").read_bytes()


def test_embed_command(tmp_path):
    cfg = _write(
        tmp_path,
        "e.json",
        {
            "graph": {"generator": {"kind": "complete_ary_tree", "arity": 2, "levels": 3}},
            "space": {"kind": "euclidean", "dim": 2, "radius": 3.0},
            "gfunc": {"exponent": 1.0, "space_threshold": 1.5},
            "xi": 1.0,
            "sample_size": 120,
            "optimizer": {"restarts": 3, "steps": 80, "polish_steps": 20},
        },
    )
    out = tmp_path / "out"
    assert main(["embed", "--config", cfg, "--out", str(out), "--seed", "1"]) == 0
    report = json.loads((out / "run_report.json").read_text())
    assert set(report["risks"]) == {"expected", "clipped_expected", "bayes", "excess"}
    assert report["eps_hat"] >= 0 and report["wall_time_s"] > 0
    assert isinstance(report["violations"], int)
    emb_lines = (out / "embedding.csv").read_text().splitlines()
    assert emb_lines[1] == "entity,coord0,coord1"
    assert len(emb_lines) == 2 + 7  # header comment + columns + 7 entities


def test_embed_from_dataset_file(tmp_path):
    g = path_graph(4)
    ds = sample_dataset(DistributionSpec.from_margin(g, 1.0), 40, seed=3)
    dpath = tmp_path / "data.csv"
    save_dataset_csv(ds, dpath)
    gpath = tmp_path / "g.txt"
    write_edge_list(g, gpath)
    cfg = _write(
        tmp_path,
        "e.json",
        {
            "graph": {"path": str(gpath)},
            "space": {"kind": "euclidean", "dim": 2, "radius": 2.0},
            "gfunc": {"exponent": 1.0, "space_threshold": 1.0},
            "dataset_path": str(dpath),
            "optimizer": {"restarts": 2, "steps": 50},
        },
    )
    out = tmp_path / "out"
    assert main(["embed", "--config", cfg, "--out", str(out)]) == 0


def test_embed_envelope_validation(tmp_path):
    cfg = _write(
        tmp_path,
        "e.json",
        {
            "graph": {"generator": {"kind": "path", "n": 3}},
            "space": {"kind": "hyperbolic", "dim": 2, "radius": 40.0},
            "gfunc": {"exponent": 1.0, "space_threshold": 1.0},
            "sample_size": 10,
        },
    )
    out = tmp_path / "out"
    assert main(["embed", "--config", cfg, "--out", str(out)]) == 1
    assert not (out / "run_report.json").exists()


def test_rc_estimate_command(tmp_path):
    cfg = _write(
        tmp_path,
        "rc.json",
        {
            "graph": {"generator": {"kind": "path", "n": 4}},
            "space": {"kind": "euclidean", "dim": 2, "radius": 1.0},
            "gfunc": {"exponent": 1.0, "space_threshold": 1.0},
            "xi": 0.6,
            "sample_size": 16,
            "trials": 30,
            "optimizer": {"restarts": 3, "steps": 50},
        },
    )
    out = tmp_path / "out"
    assert main(["rc-estimate", "--config", cfg, "--out", str(out), "--seed", "2"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 30
    assert summary["estimate_below_theorem_bound"] is True
    trials = (out / "trials.csv").read_text().splitlines()
    assert trials[1] == "trial,sup_value" and len(trials) == 32


def test_experiment_command(tmp_path):
    cfg = _write(
        tmp_path,
        "x.json",
        {
            "graph": {"generator": {"kind": "complete_ary_tree", "arity": 2, "levels": 3}},
            "xi_grid": [1.0],
            "s_grid": [50],
            "trials": 4,
            "delta": 0.25,
            "optimizer": {"restarts": 2, "steps": 60, "polish_steps": 20},
        },
    )
    out = tmp_path / "out"
    assert main(["experiment", "--config", cfg, "--out", str(out)]) == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[1] == "xi,S,excess_quantile,bound_local,max_eps_hat,bound_holds"
    assert summary[2].endswith("True")
    sweep = (out / "sweep.csv").read_text().splitlines()
    assert len(sweep) == 2 + 4


def test_experiment_rejects_large_graphs(tmp_path):
    cfg = _write(
        tmp_path,
        "x.json",
        {
            "graph": {"generator": {"kind": "path", "n": 30}},
            "xi_grid": [1.0],
            "s_grid": [50],
            "trials": 2,
            "delta": 0.2,
        },
    )
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_unknown_flag_exits_1(tmp_path, capsys):
    out = tmp_path / "nothing"
    code = main(["bounds", "--config", "x.json", "--frobnicate", "--out", str(out)])
    assert code == 1
    err = capsys.readouterr().err
    assert json.loads(err.strip())["error"] == "validation"
    assert not out.exists()


def test_unknown_config_key_rejected(tmp_path):
    bad = dict(BOUNDS_CFG)
    bad["surprise"] = 1
    cfg = _write(tmp_path, "bad.json", bad)
    assert main(["bounds", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_missing_config_rejected(tmp_path):
    assert main(["bounds", "--out", str(tmp_path / "o")]) == 1


def test_reproduce_example43_structure(tmp_path):
    payload = reproduce_example43()
    assert payload["config"]["n_vertices"] == 156
    assert payload["calibrated"]["v_min"] == 156
    assert payload["star_packing"]["v_min"] == 5
    q1 = payload["calibrated"]["q1"]["threshold"]
    assert q1 == pytest.approx(1.19e9, rel=0.02)
    out = tmp_path / "rep"
    assert main(["reproduce", "example43", "--out", str(out)]) == 0
    on_disk = json.loads((out / "example43.json").read_text())
    assert on_disk["calibrated"]["q1"]["threshold"] == q1


def test_reproduce_remark62d():
    payload = reproduce_remark62d()
    assert 60 <= payload["log10_ratio_old_over_new"]
    assert 1e70 <= payload["old_bound"]["crossover_S"] <= 1e76


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "embedrisk.cli", "reproduce", "example43", "--out", "/tmp/er-cli-test"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["config"]["n_couples"] == 12090
