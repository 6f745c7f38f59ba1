import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from localcontrol.cli import Pipeline, load_config, main


def synthetic_csv(path, n=120, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(n, 3))
    x = c[:, 0] + rng.normal(scale=0.5, size=n)
    y = 0.5 * x + c[:, 1] + rng.normal(scale=0.5, size=n)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("uid,resp,expo,cA,cB,cC\n")
        for i in range(n):
            vals = ",".join(repr(float(v)) for v in (y[i], x[i], c[i, 0], c[i, 1], c[i, 2]))
            fh.write(f"{i+1},{vals}\n")
    return path


def write_config(tmp_path, **extra):
    csv_path = synthetic_csv(tmp_path / "data.csv")
    cfg = {
        "input": str(csv_path),
        "output": str(tmp_path / "out"),
        "schema": {
            "id": "uid",
            "outcome": "resp",
            "exposure": "expo",
            "confounders": ["cA", "cB", "cC"],
        },
        "k": 6,
        "k_grid": [1, 2, 4, 6],
        "confirm": {"R": 5, "B": 19, "seed": 0},
        "forest": {"trees": 15, "min_leaf": 5, "seed": 0},
        "mob": {"min_size": 20, "max_depth": 2, "min_gain": 0.01},
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


EXPECTED_FILES = [
    "clusters.csv", "dendrogram.csv", "cluster_size_histogram.csv",
    "lrc_clusters.csv", "lrc_units.csv", "confirm.json", "null_d.csv",
    "explore.csv", "explore.json",
    "importance.csv", "mob_table.csv", "mob_tree.json", "manifest.json",
]


def test_run_all_writes_bundle(tmp_path):
    cfg_path = write_config(tmp_path)
    result = CliRunner().invoke(main, ["run-all", "--config", str(cfg_path)])
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    for name in EXPECTED_FILES:
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["complete"] is True
    assert "confirm" in manifest["timings_seconds"]
    # one PDP file per forest feature (exposure + confounders + outcome)
    pdps = sorted(p.name for p in out.glob("pdp_*.csv"))
    assert pdps == sorted(
        f"pdp_{n}.csv" for n in ("expo", "cA", "cB", "cC", "resp"))


def test_rerun_is_byte_identical(tmp_path):
    runner = CliRunner()
    cfg1 = write_config(tmp_path, output=str(tmp_path / "out1"))
    assert runner.invoke(main, ["run-all", "--config", str(cfg1)]).exit_code == 0
    cfg2 = write_config(tmp_path, output=str(tmp_path / "out2"))
    assert runner.invoke(main, ["run-all", "--config", str(cfg2)]).exit_code == 0
    out1, out2 = tmp_path / "out1", tmp_path / "out2"
    for name in EXPECTED_FILES:
        if name == "manifest.json":
            continue
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m1["files"] == m2["files"]


def test_stage_subcommands_run_standalone(tmp_path):
    cfg_path = write_config(tmp_path)
    runner = CliRunner()
    for cmd in ("aggregate", "confirm", "explore", "reveal"):
        result = runner.invoke(main, [cmd, "--config", str(cfg_path)])
        assert result.exit_code == 0, (cmd, result.output)


def test_confirm_reuses_emitted_clusters(tmp_path):
    cfg_path = write_config(tmp_path)
    cfg = load_config(cfg_path)
    pipe = Pipeline(cfg)
    pipe.run_aggregate()
    # tamper: re-cut at k=3 and overwrite the emitted assignment
    frame = pipe.frame
    labels = (np.arange(frame.n_units) % 3) + 1
    with open(Path(cfg["output"]) / "clusters.csv", "w", encoding="utf-8") as fh:
        fh.write("id,cluster_label\r\n")
        for uid, lab in zip(frame.ids.tolist(), labels.tolist()):
            fh.write(f"{uid},{lab}\r\n")
    pipe2 = Pipeline(cfg)
    assert pipe2.assignment.k == 3  # picked up from the emitted file


def test_cli_flag_overrides(tmp_path):
    cfg_path = write_config(tmp_path)
    out = tmp_path / "alt"
    result = CliRunner().invoke(
        main, ["aggregate", "--config", str(cfg_path),
               "--out", str(out), "--k", "4", "--method", "complete"])
    assert result.exit_code == 0, result.output
    rows = (out / "clusters.csv").read_text().strip().splitlines()[1:]
    labels = {int(r.split(",")[1]) for r in rows}
    assert labels == {1, 2, 3, 4}


def test_missing_input_nonzero_exit(tmp_path):
    cfg_path = write_config(tmp_path, input=str(tmp_path / "absent.csv"))
    result = CliRunner().invoke(main, ["run-all", "--config", str(cfg_path)])
    assert result.exit_code != 0


def test_failed_stage_marks_manifest_incomplete(tmp_path):
    cfg_path = write_config(tmp_path, k=10_000)  # k > n fails at aggregate
    result = CliRunner().invoke(main, ["aggregate", "--config", str(cfg_path)])
    assert result.exit_code != 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["complete"] is False
    assert manifest["error"]


def test_config_missing_field_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"input": "x.csv"}), encoding="utf-8")
    with pytest.raises(ValueError, match="missing"):
        load_config(path)
