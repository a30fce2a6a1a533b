"""Solver-agnostic binary models for the period-level ("at") formulation and
the interval-aggregated "at" / "by" formulations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .evaluation import (
    cumulative_hat_consumption,
    hat_coefficient,
    min_window_overlap,
    renewable_windows,
    window_periods,
)
from .graph import DeltaMatrix, PrecGraph, build_deltas, interval_transitive_reduction, transitive_reduction
from .grid import IntervalGrid
from .model import Instance, Semantics, ensure_valid


class FormulationKind(str, enum.Enum):
    ORIG_AT = "orig-at"
    AGG_AT = "agg-at"
    AGG_BY = "agg-by"

    @property
    def aggregated(self) -> bool:
        return self is not FormulationKind.ORIG_AT


@dataclass(frozen=True)
class Var:
    name: str
    job: int = -1
    index: int = -1  # period (x), or slot (X, Y)


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str  # "<=", "=" or ">="
    rhs: float


class ModelError(ValueError):
    pass


@dataclass
class MipModel:
    name: str = "model"
    vars: list[Var] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    kind: FormulationKind | None = None

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.vars)}

    def validate(self) -> MipModel:
        names = [v.name for v in self.vars]
        if len(set(names)) != len(names):
            raise ModelError("duplicate variable names")
        cnames = [c.name for c in self.constraints]
        if len(set(cnames)) != len(cnames):
            raise ModelError("duplicate constraint names")
        idx = self.var_index
        for name in self.objective:
            if name not in idx:
                raise ModelError(f"objective references undeclared variable {name}")
        for con in self.constraints:
            if con.sense not in ("<=", "=", ">="):
                raise ModelError(f"bad sense {con.sense!r} in {con.name}")
            for name, _ in con.terms:
                if name not in idx:
                    raise ModelError(f"{con.name} references undeclared variable {name}")
        return self

    # Row evaluation is vectorised over a CSR copy so the fuzz suites can
    # evaluate tens of thousands of points.
    @cached_property
    def _csr(self):
        idx = self.var_index
        row, col, val = [], [], []
        for r, con in enumerate(self.constraints):
            for name, c in con.terms:
                row.append(r)
                col.append(idx[name])
                val.append(c)
        rhs = np.array([c.rhs for c in self.constraints], dtype=float)
        sense = np.array([{"<=": 0, "=": 1, ">=": 2}[c.sense] for c in self.constraints], dtype=np.int8)
        return np.array(row, dtype=np.int64), np.array(col, dtype=np.int64), np.array(val), rhs, sense

    def vector(self, values) -> np.ndarray:
        x = np.zeros(len(self.vars))
        idx = self.var_index
        for name, v in values.items():
            x[idx[name]] = v
        return x

    def objective_value(self, values) -> float:
        return float(sum(c * values.get(name, 0) for name, c in self.objective.items()))

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        row, col, val, rhs, _ = self._csr
        return np.bincount(row, weights=val * x[col], minlength=len(rhs))

    def violated_rows(self, values, tol: float = 1e-9) -> list[str]:
        x = values if isinstance(values, np.ndarray) else self.vector(values)
        _, _, _, rhs, sense = self._csr
        act = self.row_activity(x)
        eps = tol * np.maximum(1.0, np.abs(rhs))
        bad = np.where(
            sense == 0, act > rhs + eps, np.where(sense == 1, np.abs(act - rhs) > eps, act < rhs - eps)
        )
        return [self.constraints[i].name for i in np.flatnonzero(bad)]

    def is_feasible(self, values, tol: float = 1e-9) -> bool:
        return not self.violated_rows(values, tol)

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def _terms(acc: dict[str, float]) -> tuple[tuple[str, float], ...]:
    return tuple((k, v) for k, v in acc.items() if v != 0.0)


def _add(acc: dict[str, float], name: str, c: float):
    acc[name] = acc.get(name, 0.0) + c


# --- period-level ---------------------------------------------------------------


def orig_at_variables(inst: Instance) -> tuple[list[Var], dict[str, float], dict[int, int]]:
    """Variables, objective and first period per job of the period-level model.

    Cheap even when the rows are not (precedence and cumulative rows grow
    quadratically in T).
    """
    vars_, objective, first = [], {}, {}
    for job in inst.jobs:
        first[job.id] = max(1, job.p)
        for t in range(first[job.id], inst.T + 1):
            name = f"x_{job.id}_{t}"
            vars_.append(Var(name, job.id, t))
            if job.profit != 0:
                objective[name] = job.profit / (1.0 + inst.r) ** t
    return vars_, objective, first


def build_orig_at(inst: Instance) -> MipModel:
    ensure_valid(inst)
    T = inst.T
    m = MipModel(name=f"orig_at_{inst.name}".rstrip("_"), kind=FormulationKind.ORIG_AT)
    m.vars, m.objective, first = orig_at_variables(inst)
    for job in inst.jobs:
        terms = tuple((f"x_{job.id}_{t}", 1.0) for t in range(first[job.id], T + 1))
        if terms:
            m.constraints.append(Constraint(f"one_{job.id}", terms, "<=", 1.0))
    minimal = transitive_reduction(PrecGraph.from_instance(inst))
    for job in inst.jobs:
        j = job.id
        for k in sorted(minimal[j]):
            for t in range(first[j], T + 1):
                acc: dict[str, float] = {}
                for u in range(first[j], t + 1):
                    _add(acc, f"x_{j}_{u}", 1.0)
                for u in range(first[k], t - job.p + 1):
                    _add(acc, f"x_{k}_{u}", -1.0)
                m.constraints.append(Constraint(f"prec_{j}_{k}_{t}", _terms(acc), "<=", 0.0))
    avail = inst.availability(T)
    for kpos, res in enumerate(inst.resources):
        cum = np.cumsum(avail[kpos])
        for t in range(1, T + 1):
            acc = {}
            for job in inst.jobs:
                q = job.demands[kpos]
                if q == 0 or job.p == 0:
                    continue
                if inst.semantics is Semantics.CUMULATIVE:
                    for u in range(first[job.id], min(T, t + job.p - 1) + 1):
                        _add(acc, f"x_{job.id}_{u}", q * (job.p - max(0, u - t)))
                else:
                    for u in range(max(t, first[job.id]), min(T, t + job.p - 1) + 1):
                        _add(acc, f"x_{job.id}_{u}", q)
            if not acc:
                continue
            rhs = float(cum[t - 1]) if inst.semantics is Semantics.CUMULATIVE else float(avail[kpos, t - 1])
            m.constraints.append(Constraint(f"res_{res.id}_{t}", _terms(acc), "<=", rhs))
    return m.validate()


# --- interval-level ---------------------------------------------------------------


@dataclass
class _AggLayout:
    first: dict[int, int]  # first slot with a variable, per job (n+1 = none)
    arcs: dict[int, set]  # slot t -> surviving (j, k, s_limit)


def _agg_layout(inst: Instance, grid: IntervalGrid, delta: DeltaMatrix) -> _AggLayout:
    n = grid.n_slots
    first = {job.id: max(1, grid.slot_of(job.p)) for job in inst.jobs}
    arcs = {}
    for t in range(1, n + 1):
        forced, kept = interval_transitive_reduction(delta, grid, t)
        for j in forced:
            # tau grows with t, so forcing at t also covers every earlier slot
            first[j] = max(first[j], t + 1)
        arcs[t] = kept
    return _AggLayout(first, arcs)


def _resource_rows(inst: Instance, grid: IntervalGrid, first: dict[int, int]):
    """Yield (name, {(job, slot): coefficient}, rhs) for the aggregated resource rows."""
    n = grid.n_slots
    if inst.semantics is Semantics.CUMULATIVE:
        for kpos, res in enumerate(inst.resources):
            for t in range(1, n + 1):
                tau_t = grid.tau_at(t)
                coef = {}
                for job in inst.jobs:
                    q = job.demands[kpos]
                    if q == 0 or job.p == 0:
                        continue
                    top = min(n, grid.slot_of(tau_t + job.p) - 1)
                    for u in range(first[job.id], top + 1):
                        c = q * cumulative_hat_consumption(grid, u, t, job.p)
                        if c:
                            coef[(job.id, u)] = c
                if coef:
                    yield f"res_{res.id}_{t}", coef, res.total(1, math.ceil(tau_t))
    else:
        for kpos, res in enumerate(inst.resources):
            for a, b in renewable_windows(grid):
                lo, hi = window_periods(grid, a, b, inst.T)
                if lo > hi:
                    continue
                coef = {}
                for job in inst.jobs:
                    q = job.demands[kpos]
                    if q == 0 or job.p == 0:
                        continue
                    for u in range(first[job.id], n + 1):
                        c = q * min_window_overlap(grid, u, job.p, lo, hi, inst.T)
                        if c:
                            coef[(job.id, u)] = c
                if coef:
                    yield f"res_{res.id}_{a}_{b}", coef, res.total(lo, hi)


def build_agg_at(inst: Instance, grid: IntervalGrid, delta: DeltaMatrix | None = None) -> MipModel:
    ensure_valid(inst)
    delta = build_deltas(inst) if delta is None else delta
    n = grid.n_slots
    lay = _agg_layout(inst, grid, delta)
    first = lay.first
    m = MipModel(name=f"agg_at_{inst.name}".rstrip("_"), kind=FormulationKind.AGG_AT)
    for job in inst.jobs:
        for s in range(first[job.id], n + 1):
            name = f"X_{job.id}_{s}"
            m.vars.append(Var(name, job.id, s))
            c = hat_coefficient(job.profit, s, grid, inst.r)
            if c:
                m.objective[name] = c
    for job in inst.jobs:
        terms = tuple((f"X_{job.id}_{s}", 1.0) for s in range(first[job.id], n + 1))
        if terms:
            m.constraints.append(Constraint(f"one_{job.id}", terms, "<=", 1.0))
    for t in range(1, n + 1):
        for j, k, lim in sorted(lay.arcs[t]):
            if first[j] > t:
                continue
            acc: dict[str, float] = {}
            for u in range(first[j], t + 1):
                _add(acc, f"X_{j}_{u}", 1.0)
            for u in range(first[k], min(lim, n) + 1):
                _add(acc, f"X_{k}_{u}", -1.0)
            m.constraints.append(Constraint(f"prec_{j}_{k}_{t}", _terms(acc), "<=", 0.0))
    for name, coef, rhs in _resource_rows(inst, grid, first):
        terms = tuple((f"X_{j}_{u}", c) for (j, u), c in coef.items())
        m.constraints.append(Constraint(name, terms, "<=", rhs))
    return m.validate()


def build_agg_by(inst: Instance, grid: IntervalGrid, delta: DeltaMatrix | None = None) -> MipModel:
    """Cumulative-indicator form: Y_js = 1 iff job j has finished by slot s.

    Objective and resource rows substitute X_js = Y_js - Y_{j,s-1}.
    """
    ensure_valid(inst)
    delta = build_deltas(inst) if delta is None else delta
    n = grid.n_slots
    lay = _agg_layout(inst, grid, delta)
    first = lay.first
    m = MipModel(name=f"agg_by_{inst.name}".rstrip("_"), kind=FormulationKind.AGG_BY)

    def diff(acc, j, s, c):
        _add(acc, f"Y_{j}_{s}", c)
        if s > first[j]:
            _add(acc, f"Y_{j}_{s - 1}", -c)

    obj: dict[str, float] = {}
    for job in inst.jobs:
        for s in range(first[job.id], n + 1):
            m.vars.append(Var(f"Y_{job.id}_{s}", job.id, s))
            c = hat_coefficient(job.profit, s, grid, inst.r)
            if c:
                diff(obj, job.id, s, c)
    m.objective = dict(_terms(obj))
    for job in inst.jobs:
        for s in range(first[job.id] + 1, n + 1):
            m.constraints.append(
                Constraint(f"mono_{job.id}_{s}", ((f"Y_{job.id}_{s - 1}", 1.0), (f"Y_{job.id}_{s}", -1.0)), "<=", 0.0)
            )
    for t in range(1, n + 1):
        for j, k, lim in sorted(lay.arcs[t]):
            if first[j] > t:
                continue
            lim = min(lim, n)
            terms = [(f"Y_{j}_{t}", 1.0)]
            if lim >= first[k]:
                terms.append((f"Y_{k}_{lim}", -1.0))
            m.constraints.append(Constraint(f"prec_{j}_{k}_{t}", tuple(terms), "<=", 0.0))
    for name, coef, rhs in _resource_rows(inst, grid, first):
        acc: dict[str, float] = {}
        for (j, u), c in coef.items():
            diff(acc, j, u, c)
        m.constraints.append(Constraint(name, _terms(acc), "<=", rhs))
    return m.validate()


def build_model(kind: FormulationKind, inst: Instance, grid: IntervalGrid | None = None,
                delta: DeltaMatrix | None = None) -> MipModel:
    kind = FormulationKind(kind)
    if kind is FormulationKind.ORIG_AT:
        return build_orig_at(inst)
    if grid is None:
        raise ValueError("aggregated formulations need a grid")
    builder = build_agg_at if kind is FormulationKind.AGG_AT else build_agg_by
    return builder(inst, grid, delta)


# --- points <-> schedules -----------------------------------------------------------


def point_from_completion(model: MipModel, completion: dict[int, int]) -> dict[str, int] | None:
    """Binary point encoding a job -> period/slot assignment in ``model``.

    None when some assignment has no variable (it was eliminated, so the
    assignment is infeasible for the model).
    """
    out = {}
    hit = set()
    for v in model.vars:
        c = completion.get(v.job)
        if c is None:
            continue
        if v.index == c:
            hit.add(v.job)
        if model.kind is FormulationKind.AGG_BY:
            out[v.name] = int(v.index >= c)
        else:
            out[v.name] = int(v.index == c)
    if hit != set(completion):
        return None
    return out


def assignment_from_point(model: MipModel, values) -> dict[int, int]:
    """Inverse of ``point_from_completion`` (first index with value 1)."""
    out: dict[int, int] = {}
    for v in model.vars:
        if values.get(v.name, 0) >= 0.5 and v.job not in out:
            out[v.job] = v.index
    return out
