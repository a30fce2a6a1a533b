"""Domain types: jobs, resources, instances, schedules and solve reports."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np


class Semantics(str, enum.Enum):
    CUMULATIVE = "cumulative"
    RENEWABLE = "renewable"


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    TIME_LIMIT = "time_limit"
    INFEASIBLE = "infeasible"
    ERROR = "error"


class InstanceError(ValueError):
    """Raised when an instance fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid instance: " + "; ".join(self.violations))


@dataclass(frozen=True)
class Job:
    id: int
    p: int
    profit: float
    demands: tuple[float, ...] = ()
    preds: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(float(d) for d in self.demands))
        object.__setattr__(self, "preds", frozenset(int(k) for k in self.preds))


@dataclass(frozen=True)
class ResourceProfile:
    """Availability R_kt, either a constant rate or one value per period."""

    id: int
    rate: float | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.rate is None) == (self.values is None):
            raise ValueError("give exactly one of rate or values")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def is_constant(self) -> bool:
        return self.values is None

    def per_period(self, n: int) -> np.ndarray:
        """Availability for periods 1..n (index 0 is period 1).

        Vector profiles shorter than ``n`` repeat their final value.
        """
        if self.values is None:
            return np.full(n, float(self.rate))
        vals = np.asarray(self.values, dtype=float)
        if n <= len(vals):
            return vals[:n].copy()
        tail = vals[-1] if len(vals) else 0.0
        return np.concatenate([vals, np.full(n - len(vals), tail)])

    def total(self, first: int, last: int) -> float:
        """Sum of availability over periods first..last (inclusive, 1-based)."""
        if last < first:
            return 0.0
        if self.values is None:
            return float(self.rate) * (last - first + 1)
        return float(self.per_period(last)[first - 1:last].sum())


@dataclass(frozen=True)
class Instance:
    jobs: tuple[Job, ...]
    resources: tuple[ResourceProfile, ...]
    T: int
    r: float
    semantics: Semantics = Semantics.CUMULATIVE
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "semantics", Semantics(self.semantics))

    @property
    def N(self) -> int:
        return len(self.jobs)

    @property
    def K(self) -> int:
        return len(self.resources)

    @cached_property
    def index(self) -> dict[int, int]:
        return {job.id: i for i, job in enumerate(self.jobs)}

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([job.id for job in self.jobs], dtype=np.int64)

    @cached_property
    def p(self) -> np.ndarray:
        return np.array([job.p for job in self.jobs], dtype=np.int64)

    @cached_property
    def f(self) -> np.ndarray:
        return np.array([job.profit for job in self.jobs], dtype=float)

    @cached_property
    def q(self) -> np.ndarray:
        """N x K demand matrix."""
        q = np.zeros((self.N, self.K))
        for i, job in enumerate(self.jobs):
            q[i, : len(job.demands)] = job.demands[: self.K]
        return q

    def job(self, job_id: int) -> Job:
        return self.jobs[self.index[job_id]]

    def availability(self, n: int) -> np.ndarray:
        """K x n matrix of per-period availability for periods 1..n."""
        if self.K == 0:
            return np.zeros((0, n))
        return np.vstack([res.per_period(n) for res in self.resources])

    def with_semantics(self, semantics: Semantics) -> Instance:
        return Instance(self.jobs, self.resources, self.T, self.r, Semantics(semantics), self.name)

    def with_rate(self, r: float) -> Instance:
        return Instance(self.jobs, self.resources, self.T, float(r), self.semantics, self.name)

    def restricted(self, keep: Iterable[int]) -> Instance:
        """Sub-instance on the given job ids; preds pointing outside are dropped."""
        keep = set(keep)
        jobs = tuple(
            Job(j.id, j.p, j.profit, j.demands, j.preds & keep) for j in self.jobs if j.id in keep
        )
        return Instance(jobs, self.resources, self.T, self.r, self.semantics, self.name)


def _find_cycle(preds: Mapping[int, Iterable[int]]) -> list[int] | None:
    """Return one directed cycle (as a list of ids) or None; self-loops ignored."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in preds}
    for root in sorted(preds):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(k for k in preds[root] if k != root and k in preds)))]
        path = [root]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                color[node] = BLACK
                continue
            if color[nxt] == GREY:
                return path[path.index(nxt):]
            if color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, iter(sorted(k for k in preds[nxt] if k != nxt and k in preds))))
    return None


def validate_instance(inst: Instance) -> list[str]:
    """List every violated invariant; an empty list means the instance is valid."""
    out: list[str] = []
    if inst.T < 1:
        out.append(f"horizon T={inst.T} must be >= 1")
    if not (inst.r >= 0 and math.isfinite(inst.r)):
        out.append(f"discount rate r={inst.r} must be finite and >= 0")
    seen: set[int] = set()
    for job in inst.jobs:
        if job.id in seen:
            out.append(f"duplicate job id {job.id}")
        seen.add(job.id)
    for job in inst.jobs:
        if job.id < 0:
            out.append(f"negative job id {job.id}")
        if job.p < 0:
            out.append(f"negative processing time at job {job.id}")
        if not math.isfinite(job.profit):
            out.append(f"non-finite profit at job {job.id}")
        if len(job.demands) != inst.K:
            out.append(f"job {job.id} has {len(job.demands)} demands, expected {inst.K}")
        if any(d < 0 or not math.isfinite(d) for d in job.demands):
            out.append(f"negative demand at job {job.id}")
        if job.p == 0 and any(d > 0 for d in job.demands):
            out.append(f"zero-duration job {job.id} has non-zero demand")
        if job.id in job.preds:
            out.append(f"self-precedence at job {job.id}")
        for k in sorted(job.preds - seen):
            out.append(f"job {job.id} has unknown predecessor {k}")
    for res in inst.resources:
        if res.values is None:
            if not (res.rate >= 0 and math.isfinite(res.rate)):
                out.append(f"resource {res.id} has invalid rate {res.rate}")
        else:
            if len(res.values) != inst.T:
                out.append(f"resource {res.id} has {len(res.values)} values, expected T={inst.T}")
            if any(v < 0 or not math.isfinite(v) for v in res.values):
                out.append(f"resource {res.id} has negative availability")
    cycle = _find_cycle({j.id: j.preds for j in inst.jobs})
    if cycle is not None:
        out.append(f"precedence cycle {sorted(cycle)}")
    return out


def ensure_valid(inst: Instance) -> Instance:
    problems = validate_instance(inst)
    if problems:
        raise InstanceError(problems)
    return inst


# --- schedules -------------------------------------------------------------


def _int_keys(mapping: Mapping) -> dict[int, int]:
    return {int(k): int(v) for k, v in mapping.items() if v is not None}


@dataclass(frozen=True)
class AtSchedule:
    """Completion period per job; jobs missing from ``completion`` are unscheduled."""

    completion: Mapping[int, int] = field(default_factory=dict)
    T_ext: int = 0

    def __post_init__(self):
        object.__setattr__(self, "completion", dict(sorted(_int_keys(self.completion).items())))

    def get(self, job_id: int) -> int | None:
        return self.completion.get(job_id)

    def __len__(self):
        return len(self.completion)

    def to_json(self) -> str:
        return json.dumps(
            {"T_ext": self.T_ext, "completion": {str(k): v for k, v in self.completion.items()}},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> AtSchedule:
        data = json.loads(text)
        if "completion" in data:
            return cls(data["completion"], int(data.get("T_ext", 0)))
        # bare map job id -> completion period (null = unscheduled)
        return cls(data, 0)


@dataclass(frozen=True)
class AggSchedule:
    """Interval index per job; jobs missing from ``interval`` are unscheduled."""

    interval: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "interval", dict(sorted(_int_keys(self.interval).items())))

    def get(self, job_id: int) -> int | None:
        return self.interval.get(job_id)

    def __len__(self):
        return len(self.interval)

    def to_json(self) -> str:
        return json.dumps({"interval": {str(k): v for k, v in self.interval.items()}}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> AggSchedule:
        data = json.loads(text)
        return cls(data.get("interval", data))


@dataclass
class SolveReport:
    npv: float
    npv_hat_ub: float | None
    gap_pct: float | None
    gamma: float
    solver_status: SolveStatus
    wall_times: dict[str, float] = field(default_factory=dict)
    schedule: AtSchedule | None = None
    agg_schedule: AggSchedule | None = None
    dropped_jobs: tuple[int, ...] = ()
    beyond_horizon: bool = False
    n_vars: int = 0
    n_constraints: int = 0
    message: str = ""

    @property
    def gap_undefined(self) -> bool:
        return self.gap_pct is None

    @property
    def negative_npv(self) -> bool:
        return self.npv < 0

    def as_dict(self) -> dict:
        return {
            "npv": self.npv,
            "npv_hat_ub": self.npv_hat_ub,
            "gap_pct": self.gap_pct,
            "gap_undefined": self.gap_undefined,
            "gamma": self.gamma,
            "solver_status": self.solver_status.value,
            "wall_times": dict(self.wall_times),
            "dropped_jobs": list(self.dropped_jobs),
            "beyond_horizon": self.beyond_horizon,
            "negative_npv": self.negative_npv,
            "n_vars": self.n_vars,
            "n_constraints": self.n_constraints,
            "completion": dict(self.schedule.completion) if self.schedule else {},
            "interval": dict(self.agg_schedule.interval) if self.agg_schedule else {},
            "message": self.message,
        }
