import csv

import pytest

from mcvd.cli import GRIDNAV_EXPECTED, bounds_report, cmd_sweep, gridnav_oracle, main
from mcvd.envs import OMG_PAYOFF

FAST = ["--env", "matrix_game", "--n_steps", "300", "--evaluate_fre", "100", "--evaluate_epoch", "2"]


def test_gridnav_oracle_passes(capsys):
    assert main(["gridnav-oracle"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == len(GRIDNAV_EXPECTED) == 4
    assert all(line.endswith("ok") for line in lines)
    assert lines[0].startswith("A:3 B:1 expected -10 revert actual -10 revert")


def test_gridnav_oracle_sensitive():
    ok, lines = gridnav_oracle(collision_penalty=-10.0)
    assert not ok and "MISMATCH" in lines[0]
    assert main(["gridnav-oracle", "--collision-penalty", "-10"]) == 1


def test_bounds_report_matrix_game():
    text = bounds_report(OMG_PAYOFF, gamma=0.0, alpha=0.5, sigma=1.0)
    assert "delta_s      = 2" in text
    assert "alpha_bound  = 0.001111111111" in text
    assert "sigma_bound  = 0.7772146605" in text
    assert "sigma 1: exceeds advisory bound" in text
    assert "alpha 0.5: exceeds advisory bound" in text


def test_bounds_cli(capsys):
    assert main(["bounds", "--sigma", "0.5"]) == 0
    assert "sigma 0.5: within" in capsys.readouterr().out
    assert main(["bounds", "--payoff", "1,1;1,1"]) == 1
    assert main(["bounds", "--delta", "2", "--r-max", "20", "--n-actions", "3", "--n-agents", "3"]) == 0


def test_train_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--out", str(out)] + FAST) == 0
    rows = list(csv.reader(open(out / "curve.csv")))
    assert rows[0] == ["step", "mean_return", "std_return", "loss_td", "loss_jt", "epsilon"]
    steps = [int(r[0]) for r in rows[1:]]
    assert steps == [0, 100, 200, 300]
    tables = (out / "final_tables.txt").read_text()
    assert "Q_jt" in tables and "Q_hat" in tables
    assert (out / "config.resolved").exists()


def test_train_deterministic_and_self_describing(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--out", str(a)] + FAST) == 0
    assert main(["train", "--config", str(a / "config.resolved"), "--out", str(b)]) == 0
    for name in ("curve.csv", "final_tables.txt", "config.resolved"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_train_rejects_bad_config(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path), "--sigma", "-1"]) == 1
    assert "sigma" in capsys.readouterr().err


def test_sweep_summary(tmp_path):
    base = {"env": "matrix_game", "n_steps": "100", "evaluate_fre": "100", "evaluate_epoch": "1"}
    results = cmd_sweep(base, "sigma", ["1", "-3"], tmp_path, seeds=[0])
    rows = list(csv.DictReader(open(tmp_path / "summary.csv")))
    assert [r["value"] for r in rows] == ["1", "-3"]
    assert rows[0]["status"] == "ok" and rows[0]["greedy_correct"] in ("true", "false")
    assert rows[1]["status"].startswith("error")
    assert results[0][2] == "ok"


def test_sweep_empty_values(tmp_path):
    with pytest.raises(ValueError):
        cmd_sweep({}, "sigma", [], tmp_path)


def test_sweep_unknown_axis(tmp_path):
    assert main(["sweep", "--axis", "nonsense", "--values", "1", "--out", str(tmp_path)]) == 1
