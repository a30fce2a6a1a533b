import json

import pytest
from hypothesis import given, settings, strategies as st

from gen import E1, instances
from geomsched.evaluation import check_feasible_at, npv
from geomsched.model import (
    AggSchedule, AtSchedule, Instance, InstanceError, Job, ResourceProfile, SolveReport, SolveStatus,
    ensure_valid, validate_instance,
)


def test_chain_is_valid():
    assert validate_instance(E1()) == []


def test_self_precedence():
    inst = Instance((Job(1, 1, 1.0, (), frozenset({1})),), (), 3, 0.0)
    assert "self-precedence at job 1" in validate_instance(inst)


def test_two_cycle_lists_witness():
    inst = Instance((Job(1, 1, 1.0, (), {2}), Job(2, 1, 1.0, (), {1})), (), 3, 0.0)
    assert "precedence cycle [1, 2]" in validate_instance(inst)


def test_dangling_and_mismatch_reported():
    inst = Instance((Job(1, 1, 1.0, (1.0, 2.0), {7}),), (ResourceProfile(1, rate=1.0),), 3, 0.0)
    msgs = validate_instance(inst)
    assert any("unknown predecessor 7" in m for m in msgs)
    assert any("2 demands, expected 1" in m for m in msgs)


def test_negative_demand_and_vector_length():
    inst = Instance((Job(1, 1, 1.0, (-1.0,)),), (ResourceProfile(1, values=(1.0, 1.0)),), 3, 0.0)
    msgs = validate_instance(inst)
    assert any("negative demand" in m for m in msgs)
    assert any("2 values, expected T=3" in m for m in msgs)


def test_ensure_valid_raises():
    with pytest.raises(InstanceError):
        ensure_valid(Instance((Job(1, 1, 1.0, (), {1}),), (), 3, 0.0))


def test_profile_needs_one_kind():
    with pytest.raises(ValueError):
        ResourceProfile(1)
    with pytest.raises(ValueError):
        ResourceProfile(1, rate=1.0, values=(1.0,))


def test_vector_profile_repeats_last_value():
    r = ResourceProfile(1, values=(1.0, 2.0, 5.0))
    assert list(r.per_period(5)) == [1, 2, 5, 5, 5]
    assert r.total(2, 4) == 12.0


@given(instances())
@settings(max_examples=60, deadline=None)
def test_empty_schedule_always_feasible(inst):
    assert validate_instance(inst) == []
    empty = AtSchedule({}, inst.T)
    assert check_feasible_at(empty, inst).feasible
    assert npv(empty, inst) == 0.0


@given(st.dictionaries(st.integers(0, 1000), st.integers(1, 10**6), max_size=20), st.integers(0, 10**6))
def test_at_schedule_round_trip(comp, T_ext):
    s = AtSchedule(comp, T_ext)
    text = s.to_json()
    assert AtSchedule.from_json(text) == s
    assert AtSchedule.from_json(text).to_json() == text


@given(st.dictionaries(st.integers(0, 1000), st.integers(1, 60), max_size=20))
def test_agg_schedule_round_trip(iv):
    s = AggSchedule(iv)
    assert AggSchedule.from_json(s.to_json()) == s


def test_bare_schedule_map_with_nulls():
    s = AtSchedule.from_json('{"1": 1, "2": null, "3": 4}')
    assert s.completion == {1: 1, 3: 4}


def test_report_flags():
    rep = SolveReport(-1.3, 5.0, None, 0.9, SolveStatus.OPTIMAL)
    d = rep.as_dict()
    assert d["gap_undefined"] and d["negative_npv"]
    json.dumps(d)
