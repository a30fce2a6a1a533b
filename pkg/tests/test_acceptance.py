"""Exit-criteria suite. Each criterion prints one PASS/FAIL line with its numbers.

Run alone with ``pytest -m acceptance tests/test_acceptance.py`` or as a script:
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import glob
import importlib.util
import os
import time
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np
import pytest

from gen import R1, random_instance
from geomsched import kernels
from geomsched.evaluation import (
    agg_tables, at_tables, check_feasible_agg, check_feasible_at, choices_to_agg, choices_to_at,
    exhaustive_upper_bound_check, lift_to_agg, npv, npv_hat,
)
from geomsched.graph import build_deltas
from geomsched.grid import build_grid, convert_rate, gamma_bound
from geomsched.instances import load_instance
from geomsched.mip import (
    FormulationKind, build_agg_at, build_agg_by, build_model, build_orig_at, orig_at_variables, point_from_completion,
)
from geomsched.model import AggSchedule, AtSchedule, Instance, Job, ResourceProfile, Semantics, SolveStatus
from geomsched.pipeline import RunConfig, run_pipeline
from geomsched.solvers import BUNDLED_HIGHS, SolverConfig, solve_bruteforce, solve_external

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.acceptance

HAVE_HIGHS = importlib.util.find_spec("highspy") is not None
PSPLIB_DIR = Path(os.environ.get("GEOMSCHED_PSPLIB_DIR", Path(__file__).parent / "data" / "psplib"))


def report(n: int, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# --- 1. lift of every feasible schedule --------------------------------------------


def test_c1_lift_upper_bound():
    rng = np.random.default_rng(20261018)
    t0 = time.perf_counter()
    schedules = not_feasible = above = 0
    spot = 0
    per_sem = Counter()
    for i in range(500):
        sem = Semantics.CUMULATIVE if i % 2 == 0 else Semantics.RENEWABLE
        eps = (0.3, 0.7, 1.0)[i % 3]
        inst = random_instance(rng, n_max=6, T_max=10, semantics=sem)
        grid = build_grid(eps, inst.T)
        delta = build_deltas(inst)
        res = exhaustive_upper_bound_check(inst, grid, delta)
        schedules += res.schedules
        not_feasible += res.not_agg_feasible
        above += res.bound_violations
        per_sem[sem.value] += res.schedules
        # reference checkers on a sample of the same schedules
        tab = at_tables(inst)
        out, cnt = kernels.enumerate_feasible(*tab.args(), 64)
        for row in out[: cnt if cnt >= 0 else 64][:8]:
            x = choices_to_at(inst, row)
            X = lift_to_agg(x, grid)
            spot += 1
            if not check_feasible_agg(X, inst, grid, delta).feasible:
                not_feasible += 1
            if npv(x, inst) > npv_hat(X, inst, grid) + 1e-9:
                above += 1
    secs = time.perf_counter() - t0
    ok = not_feasible == 0 and above == 0 and secs < 300
    report(1, ok, f"500 instances, {schedules} feasible schedules ({dict(per_sem)}), {spot} re-checked by the "
                  f"reference checkers; lift infeasible {not_feasible}, NPV > NPV-hat {above}; {secs:.1f} s")


# --- 2. approximation guarantee ----------------------------------------------------


def test_c2_guarantee():
    rng = np.random.default_rng(7)
    stats = defaultdict(Counter)
    worst = {}
    for i in range(300):
        eps = (0.3, 0.7, 1.0)[i % 3]
        inst = random_instance(rng, n_max=6, T_max=8, semantics=Semantics.CUMULATIVE, nonneg=True)
        rep = run_pipeline(RunConfig(epsilon=eps, solver=None), inst)
        opt = solve_bruteforce(inst, "orig-at").objective
        grid = build_grid(eps, inst.T)
        st = stats[eps]
        st["instances"] += 1
        gam = rep.gamma
        if rep.npv < gam * opt - 1e-9:
            st["gamma"] += 1
            ratio = rep.npv / opt
            if ratio < worst.get(eps, (1.0, 0))[0]:
                worst[eps] = (ratio, gam)
        if rep.npv > rep.npv_hat_ub + 1e-9:
            st["upper"] += 1
        for j, c in rep.schedule.completion.items():
            s = rep.agg_schedule.interval[j]
            st["jobs"] += 1
            if not grid.tau_at(s - 1) < c:
                st["sandwich_low"] += 1
            if c > grid.tau_at(s) * (1 + 2 * eps) / (1 + eps) + 1e-9:
                st["sandwich_high"] += 1
    parts = []
    bad = 0
    for eps in sorted(stats):
        s = stats[eps]
        bad += s["gamma"] + s["upper"] + s["sandwich_low"] + s["sandwich_high"]
        w = f", worst NPV/OPT {worst[eps][0]:.3f} vs gamma {worst[eps][1]:.3f}" if eps in worst else ""
        parts.append(f"eps={eps}: {s['instances']} inst, gamma viol {s['gamma']}, NPV>UB {s['upper']}, "
                     f"sandwich viol low {s['sandwich_low']} high {s['sandwich_high']} of {s['jobs']} jobs{w}")
    report(2, bad == 0, "; ".join(parts))


# --- 3. remark instance ------------------------------------------------------------


def test_c3_remark():
    inst = R1()
    opt = solve_bruteforce(inst, "orig-at")
    rep = run_pipeline(RunConfig(epsilon=3.0, solver=None), inst)
    both = set(rep.schedule.completion) == {1, 2}
    ok = opt.objective == 0.0 and not opt.assignment and both and rep.npv < 0 and rep.gap_pct is None
    report(3, ok, f"OrigAt optimum {opt.objective} (schedule {opt.assignment}); aggregated schedule "
                  f"{rep.schedule.completion}, NPV {rep.npv:.4f}, NPV-hat {rep.npv_hat_ub:.4f}, gap "
                  f"{'undefined' if rep.gap_pct is None else rep.gap_pct}")


# --- 4. formulation equivalence ----------------------------------------------------


def test_c4_formulations():
    if not HAVE_HIGHS:
        report(4, False, "no exact MIP solver available (install highspy or set GEOMSCHED_SOLVER_CMD)")
    cfg = SolverConfig(BUNDLED_HIGHS, time_limit_s=60)
    rng = np.random.default_rng(4)
    at_by = orig = not_optimal = 0
    t0 = time.perf_counter()
    for i in range(200):
        inst = random_instance(rng, n_max=6, T_max=10)
        eps = (0.3, 0.7, 1.0)[i % 3]
        grid = build_grid(eps, inst.T)
        delta = build_deltas(inst)
        a = solve_external(build_agg_at(inst, grid, delta), cfg)
        b = solve_external(build_agg_by(inst, grid, delta), cfg)
        o = solve_external(build_orig_at(inst), cfg)
        if {a.status, b.status, o.status} != {SolveStatus.OPTIMAL}:
            not_optimal += 1
            continue
        if abs(a.objective - b.objective) > 1e-6 * max(1.0, abs(a.objective)):
            at_by += 1
        ref = solve_bruteforce(inst, "orig-at").objective
        if abs(o.objective - ref) > 1e-6 * max(1.0, abs(ref)):
            orig += 1
    secs = time.perf_counter() - t0
    report(4, at_by == orig == not_optimal == 0,
           f"200 instances with HiGHS: AggAt/AggBy mismatches {at_by}, OrigAt oracle/solver mismatches {orig}, "
           f"not optimal {not_optimal}; {secs:.0f} s")


# --- 5. PSPLib desk-scale run ------------------------------------------------------


def test_c5_psplib():
    files = sorted(glob.glob(str(PSPLIB_DIR / "j30*.sm")))[:10]
    if not HAVE_HIGHS:
        report(5, False, "no exact MIP solver available")
    cfg = SolverConfig(BUNDLED_HIGHS, time_limit_s=10)
    out = {}
    for sem in (Semantics.CUMULATIVE, Semantics.RENEWABLE):
        gaps, slow, unsolved = [], 0, 0
        for path in files:
            inst = load_instance(path)
            rep = run_pipeline(RunConfig(epsilon=1.0, semantics=sem, solver=cfg), inst)
            if rep.solver_status is not SolveStatus.OPTIMAL:
                unsolved += 1
                continue
            slow += rep.wall_times["solve"] >= 10
            gaps.append(rep.gap_pct)
        out[sem] = (gaps, slow, unsolved)
    cg, cslow, cun = out[Semantics.CUMULATIVE]
    rg, _, _ = out[Semantics.RENEWABLE]
    avg = lambda xs: sum(xs) / len(xs) if xs else float("nan")
    enough = len(files) >= 10
    ok = (enough and cun == 0 and cslow == 0 and all(0 <= g <= 10 for g in cg)
          and avg(cg) <= 5 and avg(rg) <= 8)
    report(5, ok, f"{len(files)} J30 file(s) in {PSPLIB_DIR} (need >= 10); cumulative gaps "
                  f"{[round(g, 2) for g in cg]} avg {avg(cg):.2f}%, unsolved {cun}, >=10 s {cslow}; renewable "
                  f"gaps {[round(g, 2) for g in rg]} avg {avg(rg):.2f}%")


# --- 6. compression ----------------------------------------------------------------


def test_c6_compression():
    rng = np.random.default_rng(120)
    N, T = 122, 744
    jobs = []
    for j in range(1, N + 1):
        preds = frozenset(int(k) for k in rng.choice(np.arange(1, j), size=min(j - 1, 2), replace=False)) if j > 1 else frozenset()
        jobs.append(Job(j, int(rng.integers(1, 11)), float(rng.uniform(1, 10)),
                        tuple(float(q) for q in rng.integers(0, 6, 4)), preds))
    inst = Instance(tuple(jobs), tuple(ResourceProfile(k, rate=20.0) for k in range(1, 5)), T, 0.001)
    grid = build_grid(1.0, T)
    agg = build_agg_at(inst, grid)
    # the period-level rows grow quadratically in T, so only its variables are laid out
    orig_vars, _, _ = orig_at_variables(inst)
    n_orig = len(orig_vars)
    ok = grid.T_I <= 10 and agg.n_vars <= N * 10 and n_orig <= N * T and agg.n_vars < n_orig
    report(6, ok, f"N={N}, T={T}, eps=1: T_I={grid.T_I}, AggAt vars {agg.n_vars} (<= {N * 10}), "
                  f"OrigAt vars {n_orig} (<= {N * T})")


# --- 7. gamma values ---------------------------------------------------------------


def test_c7_gamma():
    g = gamma_bound(0.10, 2, 1.0)
    daily = gamma_bound(convert_rate(0.10, 365), 2 * 365, 1.0)
    rel = abs(daily - g) / g
    report(7, 0.75 < g < 0.84 and rel <= 1e-9, f"gamma(10%/yr, 2 yr, eps=1) = {g:.6f}; daily {daily:.12f}, "
                                                f"relative difference {rel:.1e}")


# --- 8. checker vs model rows ------------------------------------------------------


def _perturb(rng, row, top):
    row = row.copy()
    i = int(rng.integers(len(row)))
    row[i] = int(np.clip(row[i] + rng.choice([-2, -1, 1, 2]), 0, top))
    return row


def test_c8_fuzz():
    rng = np.random.default_rng(8)
    pairs = mismatches = feasible = 0
    kinds = Counter()
    while pairs < 10_000:
        inst = random_instance(rng, n_max=5, T_max=10)
        grid = build_grid(float(rng.choice([0.3, 0.7, 1.0])), inst.T)
        delta = build_deltas(inst)
        models = {k: build_model(k, inst, grid, delta) for k in FormulationKind}
        at, agg = at_tables(inst), agg_tables(inst, grid, delta)
        fa, ca = kernels.enumerate_feasible(*at.args(), 200)
        fg, cg = kernels.enumerate_feasible(*agg.args(), 200)
        fa, fg = fa[: ca if ca >= 0 else 200], fg[: cg if cg >= 0 else 200]
        for _ in range(5):
            mode = pairs % 3  # enumerated feasible, perturbed feasible, uniform random
            kind = list(FormulationKind)[(pairs // 3) % 3]
            kinds[kind.value] += 1
            if kind is FormulationKind.ORIG_AT:
                top, pool = inst.T, fa
            else:
                top, pool = grid.n_slots, fg
            if mode == 2 or not len(pool):
                row = rng.integers(0, top + 1, inst.N)
            else:
                row = pool[int(rng.integers(len(pool)))]
                if mode == 1:
                    row = _perturb(rng, row, top)
            if kind is FormulationKind.ORIG_AT:
                sched = choices_to_at(inst, row)
                want = check_feasible_at(AtSchedule(sched.completion), inst).feasible
                comp = sched.completion
            else:
                sched = choices_to_agg(inst, row)
                want = check_feasible_agg(sched, inst, grid, delta).feasible
                comp = sched.interval
            m = models[kind]
            point = point_from_completion(m, comp)
            got = point is not None and m.is_feasible(point)
            mismatches += got != want
            feasible += want
            pairs += 1
    report(8, mismatches == 0, f"{pairs} pairs ({dict(kinds)}), {feasible} feasible, {mismatches} mismatches")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
