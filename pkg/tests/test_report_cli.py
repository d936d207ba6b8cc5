import csv
import json
from types import SimpleNamespace

import numpy as np
import pytest

from graphbandit import report
from graphbandit.cli import main, parse_seeds
from graphbandit.environment import GroupedEnvironment, write_env
from graphbandit.graphs import line_graph, write_graph
from graphbandit.harness import ExperimentConfig, run


def small_traces(T=3, seeds=(0, 1)):
    return run(ExperimentConfig(graph="line:8", labels="blocks:1", K=2, T=T, f_est=1, seeds=seeds))


def test_emit_csv_empty(tmp_path):
    empty = SimpleNamespace(slot=np.array([]), arm=np.array([]), reward=np.array([]),
                            inst_regret=np.array([]), cum_regret=np.array([]))
    path = tmp_path / "t.csv"
    report.emit_csv(empty, path)
    assert path.read_text() == "t,slot,arm,reward,inst_regret,cum_regret\n"


def test_emit_csv_rows(tmp_path):
    path = tmp_path / "t.csv"
    report.emit_csv(small_traces()[0], path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == report.TRACE_FIELDS
    assert len(rows) == 4
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]


def test_emit_summary(tmp_path):
    path = tmp_path / "s.csv"
    report.emit_summary(small_traces(T=20), path)
    rows = list(csv.DictReader(path.open()))
    assert [r["seed"] for r in rows] == ["0", "1", "mean"]
    assert list(rows[0]) == report.SUMMARY_FIELDS
    mean = np.mean([float(r["final_regret"]) for r in rows[:2]])
    assert float(rows[2]["final_regret"]) == pytest.approx(mean)
    assert len(report.read_summary(path)) == 2


def test_csv_bytes_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    report.emit_csv(small_traces(T=200)[1], a)
    report.emit_csv(small_traces(T=200)[1], b)
    assert a.read_bytes() == b.read_bytes()


def test_scaling_report_recovers_power_law():
    rng = np.random.default_rng(0)
    data = {T: list(3.0 * T ** 0.6 * (1 + 0.01 * rng.standard_normal(20))) for T in (2**8, 2**9, 2**10, 2**11)}
    rep = report.scaling_report(data)
    assert rep.slope == pytest.approx(0.6, abs=0.02)
    assert [r.T for r in rep.rows] == sorted(data)
    assert all(r.n == 20 for r in rep.rows)


def test_scaling_report_flat_for_single_arm():
    traces = {T: [t.final_regret for t in run(ExperimentConfig(graph="line:4", labels="blocks:0", K=1, T=T,
                                                                 seeds=range(3)))]
              for T in (16, 32, 64, 128)}
    assert abs(report.scaling_report(traces).slope) < 0.05


def test_scaling_report_needs_two_horizons():
    with pytest.raises(ValueError):
        report.scaling_report({10: [1.0, 2.0]})


def test_plots_written(tmp_path):
    rep = report.scaling_report({100: [5.0, 6.0], 200: [8.0, 9.0], 400: [13.0, 12.0]})
    report.plot_scaling({"hier": rep}, tmp_path / "s.png")
    report.plot_regret_curves({"x": [np.arange(10.0), np.arange(10.0) * 2]}, tmp_path / "c.png")
    assert (tmp_path / "s.png").stat().st_size > 0
    assert (tmp_path / "c.png").stat().st_size > 0


# --- CLI -----------------------------------------------------------------------

def test_parse_seeds():
    assert parse_seeds("0..3") == [0, 1, 2, 3]
    assert parse_seeds("4,2") == [4, 2]
    assert parse_seeds("7") == [7]


def _simulate(out, *extra):
    return main(["simulate", "--graph", "line:16", "--labels", "blocks:1", "--K", "3", "--T", "200",
                 "--f", "1", "--gen", "rr", "--seeds", "0..2", "--out", str(out), *extra])


def test_cli_simulate_and_report(tmp_path):
    assert _simulate(tmp_path / "runs" / "T200") == 0
    assert main(["simulate", "--graph", "line:16", "--labels", "blocks:1", "--K", "3", "--T", "400",
                 "--f", "1", "--seeds", "0..2", "--out", str(tmp_path / "runs" / "T400")]) == 0
    out = tmp_path / "runs" / "T200"
    assert sorted(p.name for p in out.iterdir()) == [
        "config.json", "summary.csv", "trace_seed0.csv", "trace_seed1.csv", "trace_seed2.csv"]
    meta = json.loads((out / "config.json").read_text())
    assert meta["D_used"]
    assert main(["report", "--in", str(tmp_path / "runs"), "--out", str(tmp_path / "rep" / "scaling.csv")]) == 0
    rows = list(csv.DictReader((tmp_path / "rep" / "scaling.csv").open()))
    assert [int(r["T"]) for r in rows] == [200, 400]
    assert (tmp_path / "rep" / "scaling.png").exists()
    assert (tmp_path / "rep" / "scaling_curves.png").exists()


def test_cli_byte_identical(tmp_path):
    assert _simulate(tmp_path / "a") == 0
    assert _simulate(tmp_path / "b") == 0
    for name in ("summary.csv", "trace_seed1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_env_file(tmp_path):
    g = line_graph(6)
    write_graph(g, tmp_path / "g.txt")
    env = GroupedEnvironment({c: int(c > 3) for c in range(1, 7)}, {0: [0.8, 0.2], 1: [0.1, 0.9]})
    write_env(env, tmp_path / "env.txt")
    rc = main(["simulate", "--graph", str(tmp_path / "g.txt"), "--env", str(tmp_path / "env.txt"),
               "--K", "2", "--T", "50", "--f", "1", "--out", str(tmp_path / "o")])
    assert rc == 0


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--graph", "line:3", "--K", "2", "--T", "5", "--out", str(tmp_path)]) == 1
    assert "unlabeled" in capsys.readouterr().err
    assert main(["simulate", "--graph", "line:8", "--labels", "blocks:1", "--K", "2", "--T", "0",
                 "--out", str(tmp_path)]) == 1
    assert main(["report", "--in", str(tmp_path / "nothing"), "--out", str(tmp_path / "x.csv")]) == 1


def test_cli_invariant_exit_code(tmp_path, monkeypatch):
    from graphbandit import cli, harness

    def broken(*a, **k):
        raise harness.InvariantViolation("synthetic")

    monkeypatch.setattr(cli, "run", broken)
    assert _simulate(tmp_path) == 2
