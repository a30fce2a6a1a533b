"""Disaggregation of an interval-level schedule into completion periods.

Jobs are taken interval by interval in heap order (interval, -profit, id) and
each one is placed at the earliest period, not before its interval starts or
its predecessors finish, whose window [t - p + 1, t] has enough resources.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .evaluation import check_feasible_agg
from .graph import DeltaMatrix, PrecGraph, topological_order
from .grid import IntervalGrid
from .model import AggSchedule, AtSchedule, Instance, Semantics

log = logging.getLogger(__name__)


class Unplaceable(str, enum.Enum):
    DROP = "drop"
    FAIL = "fail"


class SlotStart(str, enum.Enum):
    """Earliest completion tried for a job in slot s.

    INTERVAL: floor(tau_{s-1}) + 1, the first integer after the interval
    opens (period 1 is never used). SLOT: the first period of the model slot,
    which for slot 1 is period 1 since that slot absorbs it.
    """

    INTERVAL = "interval"
    SLOT = "slot"


class ReconstructionError(RuntimeError):
    pass


@dataclass
class Reconstruction:
    schedule: AtSchedule
    dropped: tuple[int, ...] = ()
    beyond_horizon: bool = False  # some C_j > T
    beyond_extended: bool = False  # some C_j > the extended horizon


def reconstruct(X: AggSchedule, inst: Instance, grid: IntervalGrid, policy: Unplaceable = Unplaceable.DROP,
                check: bool = True, delta: DeltaMatrix | None = None,
                start: SlotStart = SlotStart.INTERVAL) -> Reconstruction:
    policy = Unplaceable(policy)
    start = SlotStart(start)
    if check:
        rep = check_feasible_agg(X, inst, grid, delta)
        if not rep.feasible:
            raise ReconstructionError(f"interval schedule is infeasible: {rep.violations[0]}")
    T_ext = grid.extended_horizon()
    if not X.interval:
        return Reconstruction(AtSchedule({}, T_ext))
    # ledger long enough for any cumulative placement that can still succeed
    H = T_ext + int(inst.p.sum()) + inst.T
    K = inst.K
    avail = np.zeros((K, H + 1))
    if K:
        avail[:, 1:] = inst.availability(H)
    cumulative = inst.semantics is Semantics.CUMULATIVE
    if cumulative:
        slack = np.cumsum(avail, axis=1)
        sufmin = np.minimum.accumulate(slack[:, ::-1], axis=1)[:, ::-1].copy()
    else:
        rem = avail.copy()
    prio = {j: (s, -inst.job(j).profit) for j, s in X.interval.items()}
    order = topological_order(PrecGraph.from_instance(inst), prio)
    comp: dict[int, int] = {}
    dropped: list[int] = []
    for j in order:
        job = inst.job(j)
        s = X.interval[j]
        if any(k not in comp for k in job.preds):
            # a predecessor was dropped (or, with check=False, never scheduled)
            dropped.append(j)
            continue
        if start is SlotStart.INTERVAL:
            t0 = math.floor(grid.tau_at(s - 1)) + 1
        else:
            t0 = grid.periods(s)[0]
        t0 = max(t0, job.p, 1)
        for k in job.preds:
            t0 = max(t0, comp[k] + job.p)
        q = inst.q[inst.index[j]]
        if job.p == 0 or not np.any(q > 0):
            t = t0
        elif cumulative:
            t = kernels.fit_cumulative(t0, job.p, q, slack, sufmin, H)
        else:
            t = kernels.fit_renewable(t0, job.p, q, rem, H)
        if t < 0:
            msg = f"job {j} cannot be placed at any period up to {H}"
            if policy is Unplaceable.FAIL:
                raise ReconstructionError(msg)
            log.warning("%s; dropping it and its dependents", msg)
            dropped.append(j)
            continue
        if job.p > 0 and np.any(q > 0):
            if cumulative:
                kernels.commit_cumulative(t, job.p, q, slack, sufmin, H)
            else:
                kernels.commit_renewable(t, job.p, q, rem)
        comp[j] = int(t)
    last = max(comp.values(), default=0)
    if last > T_ext:
        log.warning("reconstruction placed a job at %d, beyond the extended horizon %d", last, T_ext)
    return Reconstruction(
        AtSchedule(comp, max(T_ext, last)), tuple(dropped), last > inst.T, last > T_ext
    )


def disaggregate(X: AggSchedule, inst: Instance, grid: IntervalGrid,
                 policy: Unplaceable = Unplaceable.DROP, start: SlotStart = SlotStart.INTERVAL) -> AtSchedule:
    return reconstruct(X, inst, grid, policy, start=start).schedule
