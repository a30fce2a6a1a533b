"""Geometric interval grid, the interval index function and discount helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ParameterError(ValueError):
    pass


def _tau(base: float, s: int) -> float:
    # every tau value in the package goes through this one expression so that
    # comparisons against grid points are exact
    return base ** s


@dataclass(frozen=True)
class IntervalGrid:
    """Intervals ]tau_{s-1}, tau_s] with tau_s = (1+epsilon)^s.

    ``T_I`` is the index of the interval containing ``T``. Model variables use
    slots 1..``n_slots``; slot 1 also absorbs period 1 (the singleton I_0).
    """

    epsilon: float
    T: int
    T_I: int

    @property
    def base(self) -> float:
        return 1.0 + self.epsilon

    @property
    def n_slots(self) -> int:
        return max(1, self.T_I)

    @cached_property
    def tau(self) -> np.ndarray:
        """tau_0..tau_{T_I}."""
        return np.array([_tau(self.base, s) for s in range(self.T_I + 1)])

    def tau_at(self, s: int) -> float:
        return _tau(self.base, s)

    def interval_of(self, t: float) -> int:
        """ceil(log_{1+eps} t), 0 for t < 1; exact at grid points."""
        return interval_index(t, self.base)

    def slot_of(self, t: float) -> int:
        """Model slot of time t: 0 below 1, otherwise max(1, I(t))."""
        if t < 1:
            return 0
        return max(1, interval_index(t, self.base))

    def periods(self, s: int, horizon: int | None = None) -> tuple[int, int]:
        """First and last integer period of slot ``s`` (first > last when empty)."""
        first = 1 if s <= 1 else math.floor(self.tau_at(s - 1)) + 1
        last = math.floor(self.tau_at(s))
        if horizon is not None:
            last = min(last, horizon)
        return first, last

    def tau_table(self, upto: float) -> np.ndarray:
        """tau_0..tau_m with tau_m >= upto, for kernels that index intervals."""
        m = max(self.T_I, interval_index(max(upto, 1.0), self.base)) + 1
        return np.array([_tau(self.base, s) for s in range(m + 1)])

    def extended_horizon(self) -> int:
        """Latest completion the interval-by-interval reconstruction can need."""
        top = self.tau_at(self.n_slots)
        return max(self.T, math.ceil(top * (1 + 2 * self.epsilon) / (1 + self.epsilon)))


def interval_index(t: float, base: float) -> int:
    if t < 1:
        return 0
    s = max(0, math.ceil(math.log(t) / math.log(base)))
    while s > 0 and _tau(base, s - 1) >= t:
        s -= 1
    while _tau(base, s) < t:
        s += 1
    return s


def build_grid(epsilon: float, T: int) -> IntervalGrid:
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    if T < 1 or int(T) != T:
        raise ParameterError(f"horizon T must be an integer >= 1, got {T}")
    T = int(T)
    return IntervalGrid(float(epsilon), T, interval_index(T, 1.0 + epsilon))


def interval_of(t: float, grid: IntervalGrid) -> int:
    return grid.interval_of(t)


def gamma_bound(r: float, T: float, epsilon: float) -> float:
    """Approximation factor (1+r)^(-T * 2 eps / (1+eps))."""
    if r < 0 or T < 1 or epsilon <= 0:
        raise ParameterError("need r >= 0, T >= 1, epsilon > 0")
    return math.exp(-T * (2 * epsilon / (1 + epsilon)) * math.log1p(r))


def convert_rate(r: float, periods_per_target: float) -> float:
    """Re-express a per-period rate: (1+r)^(1/periods_per_target) - 1."""
    if r <= -1:
        raise ParameterError(f"rate must be > -1, got {r}")
    if periods_per_target <= 0:
        raise ParameterError("periods_per_target must be > 0")
    return math.expm1(math.log1p(r) / periods_per_target)
