import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gen import E1, random_instance
from geomsched.evaluation import check_feasible_agg, check_feasible_at, npv, npv_hat
from geomsched.graph import build_deltas
from geomsched.grid import build_grid
from geomsched.lpformat import write_lp
from geomsched.mip import (
    Constraint, FormulationKind, MipModel, ModelError, Var, assignment_from_point, build_agg_at, build_agg_by,
    build_model, build_orig_at, point_from_completion,
)
from geomsched.model import AggSchedule, AtSchedule, Instance, Job, ResourceProfile, Semantics

GOLDEN = Path(__file__).parent / "data" / "golden"


def test_orig_at_chain_shape():
    m = build_orig_at(E1())
    names = {v.name for v in m.vars}
    assert names == {f"x_1_{t}" for t in range(1, 6)} | {f"x_2_{t}" for t in range(2, 6)}
    assert m.objective["x_1_2"] == pytest.approx(1 / 1.21)
    assert {c.name for c in m.constraints} >= {"one_1", "one_2", "prec_2_1_3"}
    m.validate()


def test_orig_at_single_job_no_resources():
    inst = Instance((Job(1, 1, 2.0),), (), 3, 0.0)
    m = build_orig_at(inst)
    assert m.n_vars == 3
    assert [c.name for c in m.constraints] == ["one_1"]


def test_agg_by_has_monotone_rows():
    inst = Instance((Job(1, 1, 1.0),), (), 8, 0.1)
    m = build_agg_by(inst, build_grid(1.0, 8))
    assert [v.name for v in m.vars] == ["Y_1_1", "Y_1_2", "Y_1_3"]
    assert {c.name for c in m.constraints} == {"mono_1_2", "mono_1_3"}
    # a point that completes in slot 2 is Y = (0, 1, 1)
    assert point_from_completion(m, {1: 2}) == {"Y_1_1": 0, "Y_1_2": 1, "Y_1_3": 1}
    assert assignment_from_point(m, {"Y_1_1": 0, "Y_1_2": 1, "Y_1_3": 1}) == {1: 2}


def test_agg_forced_zero_removes_variables():
    # job 3 sits behind a chain of length 5 (p_2 + p_3), so slots with tau < 5 carry no variable for it
    inst = Instance((Job(1, 4, 1.0), Job(2, 4, 1.0, (), {1}), Job(3, 1, 1.0, (), {2})), (), 16, 0.0)
    m = build_agg_at(inst, build_grid(1.0, 16))
    assert {v.index for v in m.vars if v.job == 3} == {3, 4}
    assert point_from_completion(m, {3: 2}) is None


def test_validate_rejects_bad_models():
    with pytest.raises(ModelError):
        MipModel(vars=[Var("a"), Var("a")]).validate()
    with pytest.raises(ModelError):
        MipModel(vars=[Var("a")], constraints=[Constraint("c", (("b", 1.0),), "<=", 1)]).validate()
    with pytest.raises(ModelError):
        MipModel(vars=[Var("a")], constraints=[Constraint("c", (("a", 1.0),), "<", 1)]).validate()
    with pytest.raises(ValueError):
        build_model(FormulationKind.AGG_AT, E1())


def test_model_sizes_shrink_with_aggregation():
    rng = np.random.default_rng(5)
    inst = random_instance(rng, n_max=6, T_max=40, T_min=30)
    g = build_grid(0.5, inst.T)
    full = build_orig_at(inst)
    agg = build_agg_at(inst, g)
    assert agg.n_vars < full.n_vars
    assert agg.n_vars <= inst.N * g.n_slots


def _oracle_at(m, inst):
    for combo in itertools.product(range(inst.T + 1), repeat=inst.N):
        comp = {job.id: c for job, c in zip(inst.jobs, combo) if c}
        sched = AtSchedule(comp)
        point = point_from_completion(m, comp)
        want = check_feasible_at(sched, inst).feasible
        got = point is not None and m.is_feasible(point)
        assert got == want, (comp, m.violated_rows(point) if point else None)
        if got:
            assert m.objective_value(point) == pytest.approx(npv(sched, inst), abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_orig_at_feasible_set_matches_checker(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_max=3, T_max=6)
    _oracle_at(build_orig_at(inst), inst)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.3, 0.7, 1.0, 2.0]))
@settings(max_examples=25, deadline=None)
def test_agg_formulations_match_checker(seed, eps):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_max=3, T_max=9)
    g = build_grid(eps, inst.T)
    delta = build_deltas(inst)
    at, by = build_agg_at(inst, g, delta), build_agg_by(inst, g, delta)
    for combo in itertools.product(range(g.n_slots + 1), repeat=inst.N):
        iv = {job.id: s for job, s in zip(inst.jobs, combo) if s}
        sched = AggSchedule(iv)
        want = check_feasible_agg(sched, inst, g, delta).feasible
        pa, pb = point_from_completion(at, iv), point_from_completion(by, iv)
        got_a = pa is not None and at.is_feasible(pa)
        got_b = pb is not None and by.is_feasible(pb)
        assert got_a == got_b == want, iv
        if want:
            val = npv_hat(sched, inst, g)
            assert at.objective_value(pa) == pytest.approx(val, abs=1e-12)
            assert by.objective_value(pb) == pytest.approx(val, abs=1e-12)


def test_renewable_rows_are_windowed():
    inst = Instance(
        (Job(1, 2, 1.0, (2.0,)), Job(2, 2, 1.0, (2.0,))), (ResourceProfile(1, rate=3.0),), 8, 0.0,
        Semantics.RENEWABLE,
    )
    m = build_agg_at(inst, build_grid(1.0, 8))
    assert any(c.name.startswith("res_1_") and c.name.count("_") == 3 for c in m.constraints)


def golden_chain():
    return Instance(
        (Job(1, 1, 1.0, (1.0,)), Job(2, 2, 1.0, (1.0,), frozenset({1}))),
        (ResourceProfile(1, rate=1.0),), 4, 0.1, Semantics.CUMULATIVE, "chain",
    )


@pytest.mark.parametrize("kind", ["orig-at", "agg-at", "agg-by"])
def test_golden_lp(kind):
    inst = golden_chain()
    text = write_lp(build_model(kind, inst, build_grid(1.0, inst.T)))
    path = GOLDEN / f"chain_{kind}.lp"
    assert text == path.read_text()
