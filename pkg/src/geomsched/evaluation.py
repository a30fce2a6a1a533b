"""Objective evaluation, feasibility checkers, the at-to-interval lift and gap.

The checkers simulate resource ledgers directly from the instance data and
never look at a built model, so they can serve as an oracle against model
construction bugs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DeltaMatrix, build_deltas
from .grid import IntervalGrid
from .model import AggSchedule, AtSchedule, Instance, Semantics

TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    kind: str  # completion | horizon | precedence | resource | interval | unknown-job
    job: int | None = None
    resource: int | None = None
    period: int | None = None
    slack: float = 0.0

    def __str__(self):
        where = []
        if self.job is not None:
            where.append(f"job {self.job}")
        if self.resource is not None:
            where.append(f"resource {self.resource}")
        if self.period is not None:
            where.append(f"at {self.period}")
        return f"{self.kind} ({', '.join(where)}): slack {self.slack:.6g}"


@dataclass
class FeasibilityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.feasible

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": [
                {"kind": v.kind, "job": v.job, "resource": v.resource, "period": v.period, "slack": v.slack}
                for v in self.violations
            ],
        }


def _over(lhs: float, rhs: float) -> bool:
    return lhs > rhs + TOL * max(1.0, abs(rhs))


# --- objectives -------------------------------------------------------------


def npv(sched: AtSchedule, inst: Instance) -> float:
    total = 0.0
    for j, c in sched.completion.items():
        if j in inst.index:
            total += inst.job(j).profit / (1.0 + inst.r) ** c
    return total


def hat_coefficient(f: float, s: int, grid: IntervalGrid, r: float) -> float:
    """Discounted profit of a job finishing in slot s, optimistic endpoint."""
    if f > 0:
        return f / (1.0 + r) ** grid.tau_at(s - 1)
    if f < 0:
        return f / (1.0 + r) ** grid.tau_at(s)
    return 0.0


def npv_hat(X: AggSchedule, inst: Instance, grid: IntervalGrid) -> float:
    return sum(
        hat_coefficient(inst.job(j).profit, s, grid, inst.r)
        for j, s in X.interval.items()
        if j in inst.index
    )


def gap(npv_value: float, npv_hat_ub: float | None) -> float | None:
    """100 (UB - NPV) / NPV, or None (undefined) when NPV <= 0 or no bound."""
    if npv_hat_ub is None or not npv_value > 0:
        return None
    return 100.0 * (npv_hat_ub - npv_value) / npv_value


def lift_to_agg(sched: AtSchedule, grid: IntervalGrid) -> AggSchedule:
    return AggSchedule({j: grid.slot_of(c) for j, c in sched.completion.items()})


# --- period-level checker ----------------------------------------------------


def consumed_by(t: np.ndarray | int, C: int, p: int):
    """Units of work of a job finishing at C done by the end of period t."""
    return np.clip(np.asarray(t) - (C - p), 0, p)


def check_feasible_at(sched: AtSchedule, inst: Instance) -> FeasibilityReport:
    out: list[Violation] = []
    comp = sched.completion
    limit = max(inst.T, sched.T_ext)
    for j, c in comp.items():
        if j not in inst.index:
            out.append(Violation("unknown-job", job=j))
    for job in inst.jobs:
        c = comp.get(job.id)
        if c is None:
            continue
        if c < max(1, job.p):
            out.append(Violation("completion", job=job.id, period=c, slack=float(c - max(1, job.p))))
        if c > limit:
            out.append(Violation("horizon", job=job.id, period=c, slack=float(limit - c)))
        for k in sorted(job.preds):
            ck = comp.get(k)
            if ck is None:
                out.append(Violation("precedence", job=job.id, period=c, slack=-math.inf))
            elif ck > c - job.p:
                out.append(Violation("precedence", job=job.id, period=c, slack=float(c - job.p - ck)))
    if out and any(v.kind == "unknown-job" for v in out):
        return FeasibilityReport(out)
    H = max([limit] + list(comp.values()))
    periods = np.arange(1, H + 1)
    avail = inst.availability(H)
    for k, res in enumerate(inst.resources):
        if inst.semantics is Semantics.CUMULATIVE:
            have = np.cumsum(avail[k])
            used = np.zeros(H)
            for job in inst.jobs:
                c = comp.get(job.id)
                q = job.demands[k]
                if c is None or q == 0 or job.p == 0:
                    continue
                used += q * consumed_by(periods, c, job.p)
        else:
            have = avail[k]
            used = np.zeros(H)
            for job in inst.jobs:
                c = comp.get(job.id)
                q = job.demands[k]
                if c is None or q == 0 or job.p == 0:
                    continue
                lo = max(1, c - job.p + 1)
                used[lo - 1 : c] += q
        for t in np.flatnonzero(used > have + TOL * np.maximum(1.0, np.abs(have))):
            out.append(Violation("resource", resource=res.id, period=int(t) + 1, slack=float(have[t] - used[t])))
    return FeasibilityReport(out)


# --- interval-level checker ----------------------------------------------------


def renewable_windows(grid: IntervalGrid) -> list[tuple[int, int]]:
    """Slot ranges (a, b) carrying an aggregated renewable row: each single
    slot plus every prefix 1..b."""
    n = grid.n_slots
    wins = [(v, v) for v in range(1, n + 1)]
    wins += [(1, v) for v in range(2, n + 1)]
    return wins


def window_periods(grid: IntervalGrid, a: int, b: int, T: int) -> tuple[int, int]:
    lo = grid.periods(a)[0]
    hi = min(grid.periods(b)[1], T)
    return lo, hi


def completion_candidates(grid: IntervalGrid, s: int, p: int, T: int) -> np.ndarray:
    """Integer completions a period-level schedule can have inside slot s."""
    first, last = grid.periods(s, T)
    first = max(first, p, 1)
    if first <= last:
        return np.arange(first, last + 1)
    return np.array([max(p, math.ceil(grid.tau_at(s)), 1)])


def min_window_overlap(grid: IntervalGrid, s: int, p: int, lo: int, hi: int, T: int) -> int:
    """Fewest periods of [lo, hi] a job of length p in slot s must occupy."""
    C = completion_candidates(grid, s, p, T)
    starts = C - p + 1
    ov = np.minimum(C, hi) - np.maximum(starts, lo) + 1
    return int(np.maximum(ov, 0).min())


def cumulative_hat_consumption(grid: IntervalGrid, u: int, t: int, p: int) -> float:
    """Work a job finishing in slot u has surely done by tau_t."""
    return max(0.0, p - max(0.0, grid.tau_at(u) - grid.tau_at(t)))


def check_feasible_agg(
    X: AggSchedule, inst: Instance, grid: IntervalGrid, delta: DeltaMatrix | None = None
) -> FeasibilityReport:
    if delta is None:
        delta = build_deltas(inst)
    out: list[Violation] = []
    iv = X.interval
    n = grid.n_slots
    for j in iv:
        if j not in inst.index:
            out.append(Violation("unknown-job", job=j))
    if out:
        return FeasibilityReport(out)
    for job in inst.jobs:
        s = iv.get(job.id)
        if s is None:
            continue
        lo = max(1, grid.slot_of(job.p))
        if s < lo or s > n:
            out.append(Violation("interval", job=job.id, period=s, slack=float(min(s - lo, n - s))))
            continue
        tau_s = grid.tau_at(s)
        for i, d in delta.delta[job.id].items():
            if tau_s < d:
                out.append(Violation("precedence", job=job.id, period=s, slack=float(tau_s - d)))
                continue
            lim = grid.slot_of(tau_s - d)
            si = iv.get(i)
            if si is None or si > lim:
                out.append(Violation("precedence", job=job.id, period=s,
                                     slack=-math.inf if si is None else float(lim - si)))
    if out:
        return FeasibilityReport(out)
    placed = [(inst.job(j), s) for j, s in iv.items()]
    if inst.semantics is Semantics.CUMULATIVE:
        for t in range(1, n + 1):
            top = math.ceil(grid.tau_at(t))
            for k, res in enumerate(inst.resources):
                used = sum(
                    job.demands[k] * cumulative_hat_consumption(grid, u, t, job.p)
                    for job, u in placed
                    if job.demands[k] > 0
                )
                have = res.total(1, top)
                if _over(used, have):
                    out.append(Violation("resource", resource=res.id, period=t, slack=have - used))
    else:
        for a, b in renewable_windows(grid):
            lo, hi = window_periods(grid, a, b, inst.T)
            if lo > hi:
                continue
            for k, res in enumerate(inst.resources):
                used = 0.0
                for job, u in placed:
                    if job.demands[k] > 0 and job.p > 0:
                        C = completion_candidates(grid, u, job.p, inst.T)
                        occupied = [len(set(range(c - job.p + 1, c + 1)) & set(range(lo, hi + 1))) for c in C]
                        used += job.demands[k] * min(occupied)
                have = res.total(lo, hi)
                if _over(used, have):
                    out.append(Violation("resource", resource=res.id, period=b, slack=have - used))
    return FeasibilityReport(out)


# --- assignment tables for the exhaustive kernels ----------------------------


@dataclass
class AssignmentTables:
    """Dense encoding of a scheduling space; see ``kernels`` for the layout.

    ``rows`` labels each capacity row as (resource position, period or window).
    """

    order: np.ndarray
    allowed: np.ndarray
    pair_ptr: np.ndarray
    pair_k: np.ndarray
    lim: np.ndarray
    contrib: np.ndarray
    rhs: np.ndarray
    value: np.ndarray
    rows: list

    def args(self):
        return (self.order, self.allowed, self.pair_ptr, self.pair_k, self.lim, self.contrib, self.rhs)


def _order_positions(inst: Instance) -> np.ndarray:
    from .graph import PrecGraph

    order = PrecGraph.from_instance(inst).order()
    return np.array([inst.index[j] for j in order], dtype=np.int64)


def at_tables(inst: Instance, horizon: int | None = None) -> AssignmentTables:
    """Choice c = completion period 1..H (0 = unscheduled), checker semantics."""
    H = inst.T if horizon is None else horizon
    N, K = inst.N, inst.K
    nc = H + 1
    allowed = np.zeros((N, nc), dtype=np.bool_)
    allowed[:, 0] = True
    for i, job in enumerate(inst.jobs):
        allowed[i, max(1, job.p):] = True
    ptr = [0]
    ks: list[int] = []
    lims: list[np.ndarray] = []
    choices = np.arange(nc)
    for job in inst.jobs:
        for k in sorted(job.preds):
            ks.append(inst.index[k])
            lims.append(choices - job.p)
        ptr.append(len(ks))
    periods = np.arange(1, H + 1)
    avail = inst.availability(H)
    contrib = np.zeros((N, nc, K * H))
    rhs = np.zeros(K * H)
    rows = []
    for k in range(K):
        sl = slice(k * H, (k + 1) * H)
        if inst.semantics is Semantics.CUMULATIVE:
            rhs[sl] = np.cumsum(avail[k])
        else:
            rhs[sl] = avail[k]
        rows += [(k, int(t)) for t in periods]
        for i, job in enumerate(inst.jobs):
            q = job.demands[k]
            if q == 0 or job.p == 0:
                continue
            for c in range(max(1, job.p), nc):
                if inst.semantics is Semantics.CUMULATIVE:
                    contrib[i, c, sl] = q * consumed_by(periods, c, job.p)
                else:
                    contrib[i, c, sl] = q * ((periods >= c - job.p + 1) & (periods <= c))
    value = np.zeros((N, nc))
    value[:, 1:] = inst.f[:, None] / (1.0 + inst.r) ** np.arange(1, nc)[None, :]
    return AssignmentTables(
        _order_positions(inst), allowed, np.array(ptr, dtype=np.int64), np.array(ks, dtype=np.int64),
        np.array(lims, dtype=np.int64).reshape(len(ks), nc), contrib, rhs, value, rows,
    )


def agg_tables(inst: Instance, grid: IntervalGrid, delta: DeltaMatrix | None = None) -> AssignmentTables:
    """Choice s = slot 1..n_slots (0 = unscheduled), closure precedence."""
    if delta is None:
        delta = build_deltas(inst)
    N, K = inst.N, inst.K
    n = grid.n_slots
    nc = n + 1
    allowed = np.zeros((N, nc), dtype=np.bool_)
    allowed[:, 0] = True
    for i, job in enumerate(inst.jobs):
        allowed[i, max(1, grid.slot_of(job.p)):] = True
    ptr = [0]
    ks: list[int] = []
    lims: list[list[int]] = []
    for job in inst.jobs:
        for i, d in delta.delta[job.id].items():
            ks.append(inst.index[i])
            row = [-1] * nc
            for s in range(1, nc):
                if grid.tau_at(s) >= d:
                    row[s] = grid.slot_of(grid.tau_at(s) - d)
            lims.append(row)
        ptr.append(len(ks))
    rows = []
    blocks = []
    rhs = []
    if inst.semantics is Semantics.CUMULATIVE:
        for k, res in enumerate(inst.resources):
            for t in range(1, n + 1):
                col = np.zeros((N, nc))
                for i, job in enumerate(inst.jobs):
                    for u in range(1, nc):
                        col[i, u] = job.demands[k] * cumulative_hat_consumption(grid, u, t, job.p)
                blocks.append(col)
                rhs.append(res.total(1, math.ceil(grid.tau_at(t))))
                rows.append((k, t))
    else:
        for k, res in enumerate(inst.resources):
            for a, b in renewable_windows(grid):
                lo, hi = window_periods(grid, a, b, inst.T)
                if lo > hi:
                    continue
                col = np.zeros((N, nc))
                for i, job in enumerate(inst.jobs):
                    if job.p == 0:
                        continue
                    for u in range(1, nc):
                        col[i, u] = job.demands[k] * min_window_overlap(grid, u, job.p, lo, hi, inst.T)
                blocks.append(col)
                rhs.append(res.total(lo, hi))
                rows.append((k, (a, b)))
    contrib = np.stack(blocks, axis=2) if blocks else np.zeros((N, nc, 0))
    value = np.zeros((N, nc))
    for i, job in enumerate(inst.jobs):
        for s in range(1, nc):
            value[i, s] = hat_coefficient(job.profit, s, grid, inst.r)
    return AssignmentTables(
        _order_positions(inst), allowed, np.array(ptr, dtype=np.int64), np.array(ks, dtype=np.int64),
        np.array(lims, dtype=np.int64).reshape(len(ks), nc), contrib, np.array(rhs, dtype=float), value, rows,
    )


def choices_to_at(inst: Instance, choice, T_ext: int = 0) -> AtSchedule:
    return AtSchedule({int(inst.ids[i]): int(c) for i, c in enumerate(choice) if c > 0}, T_ext)


def choices_to_agg(inst: Instance, choice) -> AggSchedule:
    return AggSchedule({int(inst.ids[i]): int(c) for i, c in enumerate(choice) if c > 0})


def feasible_at_schedules(inst: Instance, capacity: int = 1 << 20) -> np.ndarray:
    """Every feasible period-level schedule as an (m, N) choice matrix."""
    from . import kernels

    tab = at_tables(inst)
    out, count = kernels.enumerate_feasible(*tab.args(), capacity)
    if count < 0:
        raise OverflowError(f"more than {capacity} feasible schedules")
    return np.asarray(out[:count], dtype=np.int64)


@dataclass
class LiftCheck:
    schedules: int
    not_agg_feasible: int
    bound_violations: int

    @property
    def ok(self) -> bool:
        return self.not_agg_feasible == 0 and self.bound_violations == 0


def exhaustive_upper_bound_check(inst: Instance, grid: IntervalGrid, delta: DeltaMatrix | None = None) -> LiftCheck:
    """Lift every feasible period-level schedule and test it against the
    interval-level constraints and the NPV <= NPV-hat inequality."""
    from . import kernels

    if delta is None:
        delta = build_deltas(inst)
    S = feasible_at_schedules(inst)
    slot = np.array([0] + [grid.slot_of(c) for c in range(1, inst.T + 1)], dtype=np.int64)
    L = slot[S]
    agg = agg_tables(inst, grid, delta)
    ok = kernels.batch_check(L, *agg.args()[1:])
    at = at_tables(inst)
    rows = np.arange(inst.N)
    v_at = at.value[rows, S].sum(axis=1)
    v_hat = agg.value[rows, L].sum(axis=1)
    bad = v_at > v_hat + TOL * np.maximum(1.0, np.abs(v_hat))
    return LiftCheck(len(S), int((~ok).sum()), int(bad.sum()))
