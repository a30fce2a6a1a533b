"""End-to-end run: preprocess, build the grid and model, solve, disaggregate, evaluate."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .evaluation import gap, npv, npv_hat
from .graph import PrecGraph, build_deltas, max_closure_preprocess, prune_by_horizon
from .grid import build_grid, gamma_bound
from .mip import FormulationKind, build_model
from .model import AggSchedule, AtSchedule, Instance, Semantics, SolveReport, SolveStatus, ensure_valid
from .reconstruct import SlotStart, Unplaceable, reconstruct
from .solvers import SolverConfig, solve_bruteforce, solve_external


class PipelineError(RuntimeError):
    def __init__(self, phase: str, cause):
        self.phase = phase
        self.cause = cause
        super().__init__(f"[{phase}] {cause}")


@dataclass(frozen=True)
class RunConfig:
    """``solver=None`` runs the exhaustive oracle instead of a MIP solver.
    ``rate`` and ``semantics`` override the instance's own values when set."""

    epsilon: float = 1.0
    rate: float | None = None
    semantics: Semantics | None = None
    formulation: FormulationKind = FormulationKind.AGG_AT
    solver: SolverConfig | None = None
    profit_default: float = 1.0
    horizon_limit: int | None = None
    nested_pit_alpha: float | None = None
    unplaceable: Unplaceable = Unplaceable.DROP
    slot_start: SlotStart = SlotStart.INTERVAL
    output: str | None = None
    output_format: str = "json"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.rate is not None and self.rate < 0:
            raise ValueError("rate must be >= 0")
        object.__setattr__(self, "formulation", FormulationKind(self.formulation))
        object.__setattr__(self, "slot_start", SlotStart(self.slot_start))
        object.__setattr__(self, "unplaceable", Unplaceable(self.unplaceable))
        if self.semantics is not None:
            object.__setattr__(self, "semantics", Semantics(self.semantics))


def preprocess(cfg: RunConfig, inst: Instance) -> Instance:
    keep = {j.id for j in inst.jobs}
    if cfg.horizon_limit is not None:
        keep -= prune_by_horizon(build_deltas(inst), {j.id: j.p for j in inst.jobs}, cfg.horizon_limit)
        inst = inst.restricted(keep)
    if cfg.nested_pit_alpha is not None:
        # profits are the closure weights (the processing-time reading is meaningless)
        keep = max_closure_preprocess(
            PrecGraph.from_instance(inst), {j.id: j.profit for j in inst.jobs}, cfg.nested_pit_alpha
        )
        inst = inst.restricted(keep)
    return inst


def _phase(phase, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as e:  # label and re-raise
        raise PipelineError(phase, e) from e


def run_pipeline(cfg: RunConfig, inst: Instance) -> SolveReport:
    times: dict[str, float] = {}
    start = time.perf_counter()

    def lap(name, t0):
        times[name] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if cfg.rate is not None:
        inst = inst.with_rate(cfg.rate)
    if cfg.semantics is not None:
        inst = inst.with_semantics(cfg.semantics)
    _phase("validate", ensure_valid, inst)
    inst = _phase("preprocess", preprocess, cfg, inst)
    lap("preprocess", t0)

    t0 = time.perf_counter()
    kind = cfg.formulation
    grid = _phase("grid", build_grid, cfg.epsilon, inst.T)
    delta = _phase("grid", build_deltas, inst) if kind.aggregated else None
    lap("grid", t0)

    t0 = time.perf_counter()
    model = _phase("model", build_model, kind, inst, grid, delta)
    lap("model", t0)

    t0 = time.perf_counter()
    if cfg.solver is None:
        sol = _phase("solve", solve_bruteforce, inst, kind, grid, delta)
    else:
        sol = _phase("solve", solve_external, model, cfg.solver)
    times["solve"] = sol.wall_time
    if sol.status is SolveStatus.ERROR:
        raise PipelineError("solve", sol.message)

    gamma = gamma_bound(inst.r, inst.T, cfg.epsilon) if kind.aggregated else 1.0
    base = dict(gamma=gamma, solver_status=sol.status, n_vars=model.n_vars, n_constraints=model.n_constraints)
    if not sol.has_solution:
        # the empty schedule is always feasible
        times["total"] = time.perf_counter() - start
        return SolveReport(0.0, None, None, wall_times=times, schedule=AtSchedule({}, inst.T),
                           message="no incumbent; reporting the empty schedule", **base)
    optimal = sol.status is SolveStatus.OPTIMAL

    if not kind.aggregated:
        sched = AtSchedule(sol.assignment, inst.T)
        value = npv(sched, inst)
        ub = value if optimal else None
        times["total"] = time.perf_counter() - start
        return SolveReport(value, ub, gap(value, ub), wall_times=times, schedule=sched, **base)

    t0 = time.perf_counter()
    X = AggSchedule(sol.assignment)
    rec = _phase("reconstruct", reconstruct, X, inst, grid, cfg.unplaceable, True, delta, cfg.slot_start)
    lap("reconstruct", t0)

    t0 = time.perf_counter()
    value = npv(rec.schedule, inst)
    ub = npv_hat(X, inst, grid) if optimal else None
    lap("evaluate", t0)
    times["total"] = time.perf_counter() - start
    notes = []
    if rec.dropped:
        notes.append(f"dropped unplaceable jobs {list(rec.dropped)}")
    if rec.beyond_extended:
        notes.append("a completion lies beyond the extended horizon")
    return SolveReport(
        value, ub, gap(value, ub), wall_times=times, schedule=rec.schedule, agg_schedule=X,
        dropped_jobs=rec.dropped, beyond_horizon=rec.beyond_horizon, message="; ".join(notes), **base,
    )
