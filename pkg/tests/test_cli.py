import json

import pytest

from quantsgd.cli import main
from quantsgd.harness import CSV_COLUMNS, read_csv

CONFIG = {
    "problem": {
        "dim": 8,
        "spectrum": {"kind": "power_law", "a": 2.0},
        "noise_var": 0.5,
    },
    "quantizers": {
        "data": {"kind": "additive", "epsilon": 0.01},
        "label": {"kind": "additive", "epsilon": 0.01},
    },
    "run": {"steps": 50, "batch": 1, "stepsize": "auto", "seed": 1},
    "sweep": {"axes": [["quantizers.data.epsilon", [0.005, 0.02]]], "n_seeds": 2},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(CONFIG))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_compare_fp_int_prints_verdict(capsys):
    assert run_cli("compare-fp-int", "--bits", 8, "--mantissa", 4, "--dim", 16) == 0
    assert capsys.readouterr().out == "int\n"
    run_cli("compare-fp-int", "--bits", 8, "--mantissa", 4, "--dim", 2**20)
    assert capsys.readouterr().out == "fp\n"


def test_simulate_writes_trajectory(config_path, tmp_path, capsys):
    out = tmp_path / "artifacts"
    code = run_cli("--config", config_path, "--out", out, "simulate")
    assert code == 0
    rows = read_csv(out / "trajectory.csv")
    assert len(rows) > 1
    assert set(rows[0]) == set(CSV_COLUMNS)
    assert "trajectory.csv" in capsys.readouterr().out


def test_global_flags_accepted_after_subcommand(config_path, tmp_path):
    before, after = tmp_path / "before", tmp_path / "after"
    assert run_cli("--config", config_path, "--out", before, "simulate") == 0
    assert run_cli("simulate", "--config", config_path, "--out", after) == 0
    assert (before / "trajectory.csv").read_bytes() == (
        after / "trajectory.csv"
    ).read_bytes()


def test_simulate_seed_override(config_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_cli("--config", config_path, "--out", out1, "simulate")
    run_cli("--config", config_path, "--out", out2, "--seed", 1, "simulate")
    assert (out1 / "trajectory.csv").read_bytes() == (
        out2 / "trajectory.csv"
    ).read_bytes()
    out3 = tmp_path / "c"
    run_cli("--config", config_path, "--out", out3, "--seed", 2, "simulate")
    assert (out1 / "trajectory.csv").read_bytes() != (
        out3 / "trajectory.csv"
    ).read_bytes()


def test_sweep_writes_results_and_summary(config_path, tmp_path, capsys):
    out = tmp_path / "sweep"
    assert run_cli("--config", config_path, "--out", out, "sweep") == 0
    rows = read_csv(out / "results.csv")
    assert len(rows) == 4  # 2 cells x 2 seeds
    assert (out / "summary.csv").exists()
    assert "results.csv" in capsys.readouterr().out


def test_bound_json_key_order(config_path, tmp_path, capsys):
    out = tmp_path / "bound"
    assert run_cli("--config", config_path, "--out", out, "bound") == 0
    printed = capsys.readouterr().out
    stored = (out / "bound.json").read_text()
    assert printed == stored
    report = json.loads(stored)
    assert list(report) == [
        "regime",
        "k_star",
        "var_err",
        "bias_err",
        "approx_err",
        "sigma_eff_sq",
        "total",
        "stepsize_ok",
        "config_hash",
    ]
    assert report["regime"] == "additive"  # auto-detected from the config


def test_bound_explicit_regime(config_path, tmp_path):
    out = tmp_path / "bound"
    assert run_cli("--config", config_path, "--out", out, "bound", "--regime", "general") == 0
    report = json.loads((out / "bound.json").read_text())
    assert report["regime"] == "general"
    assert "quantized_err" in report
    # additive config through the multiplicative closed form must refuse
    assert (
        run_cli("--config", config_path, "--out", out, "bound", "--regime", "multiplicative")
        == 2
    )


def test_check_conditions_artifact(config_path, tmp_path):
    out = tmp_path / "cond"
    assert run_cli("--config", config_path, "--out", out, "check-conditions") == 0
    report = json.loads((out / "conditions.json").read_text())
    assert report["regime"] == "additive"
    assert {c["name"] for c in report["conditions"]} == {
        "eps_l",
        "eps_o_plus_a",
        "eps_p",
        "eps_d",
    }


def test_decompose_artifact(config_path, tmp_path):
    out = tmp_path / "dec"
    code = run_cli(
        "--config", config_path, "--out", out, "decompose", "--n-seeds", 3
    )
    assert code == 0
    report = json.loads((out / "decompose.json").read_text())
    assert report["n_seeds"] == 3
    assert report["total"] == pytest.approx(report["direct"], abs=1e-10)
    assert report["r1"] <= 0 <= report["r2"]


def test_missing_config_is_a_clean_error(tmp_path, capsys):
    assert run_cli("--out", tmp_path, "simulate") == 2
    assert "requires --config" in capsys.readouterr().err
    assert run_cli("--config", tmp_path / "nope.json", "simulate") == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"problem": {"dim": 4}}))
    assert run_cli("--config", bad, "simulate") == 2
    assert "error:" in capsys.readouterr().err
