import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gen import E1, R1, random_instance
from geomsched.bench import BenchRow, bench, rows_from_csv, rows_to_csv, summarize
from geomsched.cli import main
from geomsched.evaluation import check_feasible_at, npv
from geomsched.grid import gamma_bound
from geomsched.instances import write_json
from geomsched.model import Instance, Job, SolveStatus
from geomsched.pipeline import PipelineError, RunConfig, preprocess, run_pipeline
from geomsched.solvers import SolverConfig, solve_bruteforce

J30 = Path(__file__).parent / "data" / "psplib" / "j301_1.sm"


def oracle(**kw):
    return RunConfig(solver=None, **kw)


# --- pipeline -------------------------------------------------------------------------


def test_chain_orig_at():
    rep = run_pipeline(oracle(formulation="orig-at"), E1())
    assert rep.schedule.completion == {1: 1, 2: 3}
    assert rep.npv == pytest.approx(1.66040571, abs=1e-8)
    assert rep.gamma == 1.0 and rep.gap_pct == 0.0


@pytest.mark.parametrize("kind", ["agg-at", "agg-by"])
def test_chain_aggregated(kind):
    rep = run_pipeline(oracle(formulation=kind, epsilon=1.0), E1())
    assert rep.agg_schedule.interval == {1: 1, 2: 2}
    assert rep.schedule.completion == {1: 2, 2: 4}
    assert rep.npv == pytest.approx(1.50946, abs=1e-5)
    assert rep.npv_hat_ub == pytest.approx(1.73554, abs=1e-5)
    assert rep.gap_pct == pytest.approx(14.98, abs=0.01)
    assert rep.gamma == pytest.approx(gamma_bound(0.1, 5, 1.0))
    assert set(rep.wall_times) >= {"grid", "model", "solve", "reconstruct", "total"}


def test_r1_negative_npv():
    rep = run_pipeline(oracle(epsilon=3.0), R1())
    assert rep.npv == pytest.approx(-4 / 3, abs=1e-4)
    assert rep.npv_hat_ub == pytest.approx(5.0247, abs=1e-4)
    assert rep.gap_pct is None and rep.as_dict()["negative_npv"]
    assert run_pipeline(oracle(formulation="orig-at"), R1()).npv == 0.0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_orig_at_pipeline_equals_oracle(seed):
    inst = random_instance(np.random.default_rng(seed), n_max=4, T_max=8)
    rep = run_pipeline(oracle(formulation="orig-at"), inst)
    assert rep.npv == pytest.approx(solve_bruteforce(inst, "orig-at").objective, abs=1e-12)
    assert check_feasible_at(rep.schedule, inst).feasible


def test_horizon_limit_prunes():
    inst = Instance((Job(1, 3, 1.0), Job(2, 3, 1.0, (), {1})), (), 8, 0.0)
    kept = preprocess(oracle(horizon_limit=4), inst)
    assert [j.id for j in kept.jobs] == [1] and kept.T == 8


def test_nested_pit_drops_unprofitable_tail():
    inst = Instance((Job(1, 1, -5.0), Job(2, 1, 1.0, (), {1}), Job(3, 1, 2.0)), (), 4, 0.0)
    kept = preprocess(oracle(nested_pit_alpha=1.0), inst)
    assert [j.id for j in kept.jobs] == [3]


def test_solver_error_raises(tmp_path):
    cfg = RunConfig(solver=SolverConfig(f"{sys.executable} -c 'import sys; sys.exit(1)' {{model}} {{solution}}"))
    with pytest.raises(PipelineError) as e:
        run_pipeline(cfg, E1())
    assert e.value.phase == "solve"


@pytest.mark.solver
def test_j30_with_highs():
    pytest.importorskip("highspy")
    from geomsched.instances import load_instance
    from geomsched.solvers import default_solver_config

    inst = load_instance(str(J30))
    rep = run_pipeline(RunConfig(epsilon=1.0, solver=default_solver_config(120)), inst)
    assert rep.solver_status is SolveStatus.OPTIMAL
    assert 0 <= rep.gap_pct < 5
    assert check_feasible_at(rep.schedule, inst).feasible


# --- bench -------------------------------------------------------------------------


@pytest.fixture
def three(tmp_path):
    paths = []
    for i in range(3):
        inst = random_instance(np.random.default_rng(100 + i), n_max=4, T_max=8)
        p = tmp_path / f"inst{i}.json"
        p.write_text(write_json(inst))
        paths.append(str(p))
    return paths


def test_bench_rows_and_summary(three):
    rows = bench(oracle(), three, [0.5, 1.0])
    assert len(rows) == 6
    assert [(r.instance, r.epsilon) for r in rows] == sorted((r.instance, r.epsilon) for r in rows)
    summ = summarize(rows)
    assert [s.epsilon for s in summ] == [0.5, 1.0]
    assert all(s.instances == 3 and s.solved == 3 for s in summ)
    assert rows_from_csv(rows_to_csv(rows)) == rows


def test_bench_parallel_matches_serial(three):
    a = bench(oracle(), three, [1.0], jobs=1)
    b = bench(oracle(), three, [1.0], jobs=2)
    strip = lambda rows: [(r.instance, r.status, r.npv, r.npv_hat_ub) for r in rows]
    assert strip(a) == strip(b)


def test_bench_error_row(tmp_path, three):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    rows = bench(oracle(), three[:1] + [str(bad)], [1.0])
    assert {r.status for r in rows} == {"optimal", "error"}


def test_csv_blank_cells():
    row = BenchRow("x", 1.0, "cumulative", "optimal", 0.1, -1.5, 2.0, None, 0.9)
    assert rows_from_csv(rows_to_csv([row])) == [row]


# --- CLI ---------------------------------------------------------------------------


@pytest.fixture
def chain_file(tmp_path):
    p = tmp_path / "E1.json"
    p.write_text(write_json(E1()))
    return p


def test_cli_solve_json(chain_file, tmp_path, capsys):
    assert main(["solve", str(chain_file), "--solver-cmd", "oracle", "--epsilon", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["npv"] == pytest.approx(1.50946, abs=1e-5)
    assert out["instance"] == "E1"
    target = tmp_path / "r.csv"
    assert main(["solve", str(chain_file), "--solver-cmd", "oracle", "--format", "csv", "--output", str(target)]) == 0
    assert target.read_text().splitlines()[0].startswith("instance,npv")


def test_cli_check(chain_file, tmp_path, capsys):
    good, bad = tmp_path / "good.json", tmp_path / "bad.json"
    good.write_text('{"1": 1, "2": 3}')
    bad.write_text('{"1": 1, "2": 2}')
    assert main(["check", str(chain_file), str(good)]) == 0
    assert json.loads(capsys.readouterr().out)["feasible"] is True
    assert main(["check", str(chain_file), str(bad)]) == 3


def test_cli_export_model(chain_file, capsys):
    assert main(["export-model", str(chain_file), "--formulation", "orig-at"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("\\ orig_at_E1\nMaximize") and text.rstrip().endswith("End")


def test_cli_gamma(capsys):
    assert main(["gamma", "--rate", "0.1", "--horizon", "2", "--epsilon", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.1**-2)
    assert main(["gamma", "--rate", "0.1", "--horizon", "2", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["gamma"] == pytest.approx(1.1**-2)


def test_cli_bench(three, capsys):
    assert main(["bench", *three, "--solver-cmd", "oracle", "--epsilons", "0.5,1", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.count("\n") >= 1 + 6 + 1 + 2


def test_cli_errors(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json"), "--solver-cmd", "oracle"]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["gamma", "--rate", "-1", "--horizon", "2"]) == 1


def test_console_entry_point(chain_file):
    out = subprocess.run([sys.executable, "-m", "geomsched.cli", "gamma", "--rate", "0", "--horizon", "5"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and float(out.stdout) == 1.0
