"""External MIP solver subprocess backend and the exhaustive oracle."""

from __future__ import annotations

import importlib.util
import logging
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .evaluation import agg_tables, at_tables
from .graph import DeltaMatrix, build_deltas
from .grid import IntervalGrid
from .lpformat import write_lp
from .mip import FormulationKind, MipModel
from .model import Instance, SolveStatus

log = logging.getLogger(__name__)

ENV_SOLVER = "GEOMSCHED_SOLVER_CMD"
ROUND_TOL = 1e-4
ORACLE_MAX_JOBS = 8
ORACLE_MAX_T = 14
ORACLE_MAX_SLOTS = 8

BUNDLED_HIGHS = (
    f"{shlex.quote(sys.executable)} -m geomsched.highs_runner {{model}} {{solution}}"
    " --time-limit {time_limit} --mip-gap {mip_gap}"
)


class SolverError(RuntimeError):
    pass


class SolutionFormatError(SolverError):
    pass


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """``command_template`` must contain {model} and {solution}; {time_limit}
    and {mip_gap} are substituted when present."""

    command_template: str
    time_limit_s: float = 60.0
    mip_gap: float = 0.0

    def __post_init__(self):
        for ph in ("{model}", "{solution}"):
            if ph not in self.command_template:
                raise ValueError(f"solver command template lacks {ph}")
        if not self.time_limit_s > 0:
            raise ValueError("time limit must be > 0")
        if self.mip_gap < 0:
            raise ValueError("mip gap must be >= 0")

    def argv(self, model: str, solution: str) -> list[str]:
        subs = {
            "{model}": model,
            "{solution}": solution,
            "{time_limit}": format(self.time_limit_s, "g"),
            "{mip_gap}": format(self.mip_gap, "g"),
        }
        out = []
        for tok in shlex.split(self.command_template):
            for k, v in subs.items():
                tok = tok.replace(k, v)
            out.append(tok)
        return out


def default_solver_config(time_limit_s: float = 60.0, mip_gap: float = 0.0) -> SolverConfig | None:
    """$GEOMSCHED_SOLVER_CMD, else the bundled HiGHS runner when highspy is
    importable, else None."""
    tpl = os.environ.get(ENV_SOLVER)
    if tpl:
        return SolverConfig(tpl, time_limit_s, mip_gap)
    if importlib.util.find_spec("highspy") is not None:
        return SolverConfig(BUNDLED_HIGHS, time_limit_s, mip_gap)
    return None


@dataclass
class MipSolution:
    status: SolveStatus
    values: dict[str, int] = field(default_factory=dict)
    objective: float = 0.0
    wall_time: float = 0.0
    message: str = ""
    assignment: dict[int, int] = field(default_factory=dict)

    @property
    def has_solution(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)


def read_solution(text: str, model: MipModel) -> dict[str, int]:
    """Parse "name value" lines; values are rounded to 0/1 within 1e-4."""
    declared = model.var_index
    out: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionFormatError(f"solution line {lineno}: expected 'name value', got {raw!r}")
        name, sval = parts
        try:
            v = float(sval)
        except ValueError:
            raise SolutionFormatError(f"solution line {lineno}: bad value {sval!r}") from None
        if name not in declared:
            raise SolutionFormatError(f"solution line {lineno}: unknown variable {name!r}")
        if not -0.5 <= v <= 1.5:
            raise SolutionFormatError(f"solution line {lineno}: value {v} outside [-0.5, 1.5]")
        r = round(v)
        if abs(v - r) > ROUND_TOL:
            raise SolutionFormatError(f"solution line {lineno}: fractional value {v} for binary {name}")
        out[name] = int(r)
    return out


def _assignment(model: MipModel, values: dict[str, int]) -> dict[int, int]:
    from .mip import assignment_from_point

    return assignment_from_point(model, values)


def solve_external(model: MipModel, cfg: SolverConfig) -> MipSolution:
    workdir = tempfile.mkdtemp(prefix="geomsched-")
    model_path = os.path.join(workdir, "model.lp")
    sol_path = os.path.join(workdir, "solution.txt")
    with open(model_path, "w") as fh:
        fh.write(write_lp(model))
    argv = cfg.argv(model_path, sol_path)
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=cfg.time_limit_s + 30)
    except FileNotFoundError as e:
        return MipSolution(SolveStatus.ERROR, message=f"{e}; files kept in {workdir}")
    except subprocess.TimeoutExpired:
        return MipSolution(SolveStatus.ERROR, wall_time=time.perf_counter() - t0,
                           message=f"solver did not exit after the time limit; files kept in {workdir}")
    wall = time.perf_counter() - t0
    has_sol = os.path.exists(sol_path) and os.path.getsize(sol_path) > 0
    code = proc.returncode
    output = (proc.stdout + proc.stderr).strip()

    def error(msg):
        return MipSolution(SolveStatus.ERROR, wall_time=wall, message=f"{msg}; files kept in {workdir}\n{output}".strip())

    if code == 2:
        shutil.rmtree(workdir, ignore_errors=True)
        return MipSolution(SolveStatus.INFEASIBLE, wall_time=wall)
    if code == 4 or (code == 3 and not has_sol):
        shutil.rmtree(workdir, ignore_errors=True)
        return MipSolution(SolveStatus.TIME_LIMIT, wall_time=wall)
    if code not in (0, 3):
        return error(f"solver exited with code {code}")
    if not has_sol:
        return error("solver reported success but wrote no solution")
    with open(sol_path) as fh:
        text = fh.read()
    try:
        values = read_solution(text, model)
    except SolutionFormatError as e:
        return error(str(e))
    bad = model.violated_rows(values, tol=1e-6)
    if bad:
        return error(f"rounded solution violates {len(bad)} rows, first {bad[0]}")
    shutil.rmtree(workdir, ignore_errors=True)
    status = SolveStatus.OPTIMAL if code == 0 else SolveStatus.FEASIBLE
    ones = {k: v for k, v in values.items() if v}
    return MipSolution(status, ones, model.objective_value(ones), wall, "", _assignment(model, ones))


# --- exhaustive oracle -------------------------------------------------------------


def _guard(inst: Instance, kind: FormulationKind, grid: IntervalGrid | None):
    if inst.N > ORACLE_MAX_JOBS:
        raise OracleLimitError(f"oracle needs N <= {ORACLE_MAX_JOBS}, got {inst.N}")
    if kind is FormulationKind.ORIG_AT:
        if inst.T > ORACLE_MAX_T:
            raise OracleLimitError(f"oracle needs T <= {ORACLE_MAX_T}, got {inst.T}")
    else:
        if grid is None:
            raise ValueError("aggregated oracle needs a grid")
        if grid.n_slots > ORACLE_MAX_SLOTS:
            raise OracleLimitError(f"oracle needs at most {ORACLE_MAX_SLOTS} intervals, got {grid.n_slots}")


def point_names(inst: Instance, kind: FormulationKind, assignment: dict[int, int], n_slots: int = 0) -> dict[str, int]:
    if kind is FormulationKind.ORIG_AT:
        return {f"x_{j}_{c}": 1 for j, c in assignment.items()}
    if kind is FormulationKind.AGG_AT:
        return {f"X_{j}_{s}": 1 for j, s in assignment.items()}
    return {f"Y_{j}_{u}": 1 for j, s in assignment.items() for u in range(s, n_slots + 1)}


def solve_bruteforce(inst: Instance, formulation: FormulationKind, grid: IntervalGrid | None = None,
                     delta: DeltaMatrix | None = None) -> MipSolution:
    """Exact maximiser by exhaustive branch and bound over job -> period/slot
    assignments (ties to the lexicographically smallest assignment)."""
    kind = FormulationKind(formulation)
    _guard(inst, kind, grid)
    t0 = time.perf_counter()
    if kind is FormulationKind.ORIG_AT:
        tab = at_tables(inst)
    else:
        tab = agg_tables(inst, grid, build_deltas(inst) if delta is None else delta)
    best, val, found = kernels.search_best(*tab.args(), tab.value)
    if not found:  # unreachable: the empty assignment is always feasible
        return MipSolution(SolveStatus.INFEASIBLE, wall_time=time.perf_counter() - t0)
    assignment = {int(inst.ids[i]): int(c) for i, c in enumerate(np.asarray(best)) if c > 0}
    objective = float(sum(tab.value[inst.index[j], c] for j, c in assignment.items()))
    values = point_names(inst, kind, assignment, grid.n_slots if grid is not None else 0)
    return MipSolution(SolveStatus.OPTIMAL, values, objective, time.perf_counter() - t0, "", assignment)
