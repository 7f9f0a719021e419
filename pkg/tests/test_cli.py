"""CLI exit codes and artifact tests."""

import json

import pytest

from simopt.cli import main
from problems import sr_grid_means, ten_solution_means


@pytest.fixture
def sr_config(tmp_path):
    doc = {
        "space": {
            "axes": [
                {"name": "row", "levels": [0, 1, 2, 3, 4]},
                {"name": "col", "levels": [0, 1, 2, 3, 4]},
            ]
        },
        "objective": {
            "kind": "synthetic",
            "means": sr_grid_means(),
            "noise": {"type": "gaussian", "sigma": 0.05},
        },
        "solver": {"solver": "sr", "ruler": [0, 1]},
        "budget": 120,
        "trials": 2,
        "master_seed": 7,
        "report_replicates": 5,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def kn_config(tmp_path):
    doc = {
        "space": {"axes": [{"name": "level", "levels": list(range(10))}]},
        "objective": {
            "kind": "synthetic",
            "means": ten_solution_means(),
            "noise": {"type": "gaussian", "sigma": 0.05},
        },
        "solver": {"solver": "kn", "r0": 10, "delta": 0.05, "p": 0.05},
        "trials": 3,
        "master_seed": 11,
        "report_replicates": 5,
    }
    path = tmp_path / "kn_config.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_success(sr_config, tmp_path, capsys):
    out = tmp_path / "artifacts"
    code = main(["run", "--config", str(sr_config), "--out", str(out)])
    assert code == 0
    assert (out / "records.jsonl").exists()
    assert (out / "trials.csv").exists()
    assert (out / "summary.json").exists()
    assert (out / "trials.png").exists()
    assert "artifacts written" in capsys.readouterr().out


def test_run_no_plot(sr_config, tmp_path):
    out = tmp_path / "plain"
    assert main(["run", "--config", str(sr_config), "--out", str(out), "--no-plot"]) == 0
    assert not (out / "trials.png").exists()


def test_run_seed_override_changes_records(sr_config, tmp_path):
    out1, out2, out3 = (tmp_path / n for n in ("s1", "s2", "s3"))
    main(["run", "--config", str(sr_config), "--out", str(out1), "--seed", "1", "--no-plot"])
    main(["run", "--config", str(sr_config), "--out", str(out2), "--seed", "1", "--no-plot"])
    main(["run", "--config", str(sr_config), "--out", str(out3), "--seed", "2", "--no-plot"])
    r1 = (out1 / "records.jsonl").read_bytes()
    assert r1 == (out2 / "records.jsonl").read_bytes()
    assert r1 != (out3 / "records.jsonl").read_bytes()


def test_missing_config_is_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_invalid_json_is_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 2


def test_bad_solver_is_exit_2(sr_config, tmp_path):
    doc = json.loads(sr_config.read_text())
    doc["solver"] = {"solver": "gradient_descent"}
    bad = tmp_path / "bad_solver.json"
    bad.write_text(json.dumps(doc))
    assert main(["run", "--config", str(bad)]) == 2


def test_worker_spawn_failure_is_exit_3(sr_config, tmp_path):
    doc = json.loads(sr_config.read_text())
    doc["objective"] = {"kind": "external", "command": ["/no/such/worker"]}
    bad = tmp_path / "bad_worker.json"
    bad.write_text(json.dumps(doc))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "w")]) == 3


def test_sweep_delta(kn_config, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(
        ["sweep-delta", "--config", str(kn_config), "--deltas", "0.10,0.05", "--out", str(out)]
    )
    assert code == 0
    assert (out / "delta_curve.csv").exists()
    assert (out / "delta_curve.png").exists()
    lines = (out / "delta_curve.csv").read_text().strip().splitlines()
    assert lines[0] == "delta,mean_evaluations,sd_evaluations,trials"
    assert len(lines) == 3
    assert "delta=0.1" in capsys.readouterr().out


def test_sweep_delta_bad_deltas(kn_config):
    assert main(["sweep-delta", "--config", str(kn_config), "--deltas", "a,b"]) == 2


def test_compare(sr_config, tmp_path):
    doc = json.loads(sr_config.read_text())
    doc["solver"] = {"solver": "baseline_rs"}
    rs_config = tmp_path / "rs.json"
    rs_config.write_text(json.dumps(doc))
    out = tmp_path / "cmp"
    code = main(
        [
            "compare",
            "--config-a",
            str(sr_config),
            "--config-b",
            str(rs_config),
            "--tests",
            "4",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert (out / "verdicts.csv").exists()
    lines = (out / "verdicts.csv").read_text().strip().splitlines()
    assert len(lines) == 5  # header + one test per trial


def test_compare_mismatched_spaces(sr_config, kn_config):
    assert main(["compare", "--config-a", str(sr_config), "--config-b", str(kn_config)]) == 2
