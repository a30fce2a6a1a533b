"""Precedence-DAG computations: closures, longest-path spans, per-interval
reductions, prioritised topological orders and max-closure pruning."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from . import kernels
from .grid import IntervalGrid
from .model import Instance, _find_cycle


class CycleError(ValueError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"precedence graph has a cycle: {self.cycle}")


@dataclass(frozen=True)
class PrecGraph:
    """Arc (j, k) for every k in P_j; its length is p_j."""

    preds: Mapping[int, frozenset[int]]
    p: Mapping[int, int]

    @classmethod
    def from_instance(cls, inst: Instance) -> PrecGraph:
        return cls({j.id: frozenset(j.preds) for j in inst.jobs}, {j.id: j.p for j in inst.jobs})

    @classmethod
    def from_arcs(cls, nodes: Iterable[int], arcs: Iterable[tuple[int, int]], p=None) -> PrecGraph:
        nodes = list(nodes)
        preds: dict[int, set[int]] = {v: set() for v in nodes}
        for j, k in arcs:
            preds[j].add(k)
        p = p or {}
        return cls({v: frozenset(s) for v, s in preds.items()}, {v: int(p.get(v, 1)) for v in nodes})

    @property
    def nodes(self) -> list[int]:
        return sorted(self.preds)

    @property
    def arcs(self) -> set[tuple[int, int]]:
        return {(j, k) for j, ks in self.preds.items() for k in ks}

    def arc_length(self, j: int, k: int) -> int:
        return self.p[j]

    @cached_property
    def succs(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {v: set() for v in self.preds}
        for j, ks in self.preds.items():
            for k in ks:
                out.setdefault(k, set()).add(j)
        return out

    def order(self) -> list[int]:
        """Predecessors-first order (Kahn, ascending id among ready nodes)."""
        indeg = {v: len(self.preds[v]) for v in self.preds}
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        out = []
        while ready:
            v = heapq.heappop(ready)
            out.append(v)
            for w in self.succs.get(v, ()):
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(ready, w)
        if len(out) != len(self.preds):
            raise CycleError(_find_cycle(self.preds) or sorted(set(self.preds) - set(out)))
        return out


def transitive_closure(g: PrecGraph) -> dict[int, frozenset[int]]:
    closure: dict[int, frozenset[int]] = {}
    for j in g.order():
        acc: set[int] = set()
        for k in g.preds[j]:
            acc.add(k)
            acc |= closure[k]
        closure[j] = frozenset(acc)
    return closure


def transitive_reduction(g: PrecGraph) -> dict[int, frozenset[int]]:
    """Minimal predecessor sets with the same closure."""
    closure = transitive_closure(g)
    out = {}
    for j, ks in g.preds.items():
        implied: set[int] = set()
        for k in ks:
            implied |= closure[k]
        out[j] = frozenset(ks - implied)
    return out


class DeltaMatrix:
    """Sparse longest-path spans Delta[j][i] for i in the closure of j.

    Also keeps a CSR copy indexed by position in ``ids`` for the kernels.
    """

    def __init__(self, delta: Mapping[int, Mapping[int, int]]):
        self.delta = {j: dict(sorted(row.items())) for j, row in delta.items()}
        self.ids = sorted(self.delta)
        pos = {v: i for i, v in enumerate(self.ids)}
        ptr = [0]
        idx: list[int] = []
        val: list[int] = []
        for j in self.ids:
            row = self.delta[j]
            idx.extend(pos[i] for i in row)
            val.extend(row.values())
            ptr.append(len(idx))
        self.pos = pos
        self.ptr = np.array(ptr, dtype=np.int64)
        self.idx = np.array(idx, dtype=np.int64)
        self.val = np.array(val, dtype=np.float64)

    def __getitem__(self, key: tuple[int, int]) -> int:
        j, i = key
        return self.delta[j][i]

    def get(self, j: int, i: int, default=None):
        return self.delta.get(j, {}).get(i, default)

    def closure(self, j: int) -> list[int]:
        return list(self.delta.get(j, {}))

    def items(self):
        for j, row in self.delta.items():
            for i, d in row.items():
                yield (j, i), d

    def __len__(self):
        return sum(len(r) for r in self.delta.values())


def longest_path_deltas(g: PrecGraph) -> DeltaMatrix:
    delta: dict[int, dict[int, int]] = {}
    for j in g.order():
        pj = g.p[j]
        row: dict[int, int] = {}
        for k in g.preds[j]:
            if row.get(k, -1) < pj:
                row[k] = pj
            for l, d in delta[k].items():
                if row.get(l, -1) < pj + d:
                    row[l] = pj + d
        delta[j] = row
    return DeltaMatrix(delta)


def interval_transitive_reduction(delta: DeltaMatrix, grid: IntervalGrid, t: int):
    """Precedence arcs needed at interval ``t`` of the aggregated model.

    Returns ``(forced_zero, arcs)``: jobs that cannot finish by interval t,
    and surviving ``(j, k, s_limit)`` meaning k must finish in slot <= s_limit
    whenever j finishes in a slot <= t.
    """
    tau_t = grid.tau_at(t)
    maxd = float(delta.val.max()) if len(delta.val) else 0.0
    tau_tab = grid.tau_table(max(tau_t, 1.0) + maxd + 1)
    forced, keep, limit = kernels.reduce_interval(delta.ptr, delta.idx, delta.val, tau_t, t, tau_tab)
    ids = delta.ids
    forced_zero = {ids[j] for j in np.flatnonzero(forced)}
    arcs = set()
    for j in range(len(ids)):
        if forced[j]:
            continue
        for e in range(delta.ptr[j], delta.ptr[j + 1]):
            if keep[e]:
                arcs.add((ids[j], ids[delta.idx[e]], int(limit[e])))
    return forced_zero, arcs


def topological_order(g: PrecGraph, priority: Mapping[int, tuple[float, float]]) -> list[int]:
    """Min-heap topological order on the jobs in ``priority``.

    Ready jobs leave the heap by (interval, -profit, id).
    """
    nodes = set(priority)
    indeg = {v: sum(1 for k in g.preds.get(v, ()) if k in nodes) for v in nodes}
    heap = [(*priority[v], v) for v in nodes if indeg[v] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        *_, v = heapq.heappop(heap)
        out.append(v)
        for w in g.succs.get(v, ()):
            if w in nodes:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(heap, (*priority[w], w))
    if len(out) != len(nodes):
        sub = {v: frozenset(k for k in g.preds.get(v, ()) if k in nodes) for v in nodes}
        raise CycleError(_find_cycle(sub) or sorted(nodes - set(out)))
    return out


def closure_value(g: PrecGraph, weights: Mapping[int, float], kept: Iterable[int]) -> float:
    return float(sum(weights[v] for v in kept))


def max_closure_preprocess(g: PrecGraph, weights: Mapping[int, float], alpha: float) -> set[int]:
    """Maximum-weight closure under weights scaled by ``alpha`` when positive.

    Solved exactly as a min s-t cut; the returned set is the smallest optimal
    closure, so lowering alpha never grows it.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    g.order()  # cycle check
    w = {v: (float(weights[v]) if weights[v] <= 0 else alpha * float(weights[v])) for v in g.preds}
    net = nx.DiGraph()
    src, snk = ("s",), ("t",)
    net.add_node(src)
    net.add_node(snk)
    for v, wv in w.items():
        net.add_node(v)
        if wv > 0:
            net.add_edge(src, v, capacity=wv)
        elif wv < 0:
            net.add_edge(v, snk, capacity=-wv)
    for j, ks in g.preds.items():
        for k in ks:
            net.add_edge(j, k)  # no capacity attribute = infinite
    # nx.minimum_cut reports the largest source side; walk the residual graph
    # from the source instead to get the smallest one
    R = nx.algorithms.flow.preflow_push(net, src, snk)
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        for v, attr in R[u].items():
            if v not in seen and attr["capacity"] - attr["flow"] > 0:
                seen.add(v)
                stack.append(v)
    return {v for v in seen if v != src}


def earliest_completion(delta: DeltaMatrix, p: Mapping[int, int]) -> dict[int, int]:
    """Earliest completion under precedences alone: max(p_j, max_k Delta_jk + p_k)."""
    out = {}
    for j in delta.delta:
        best = p[j]
        for k, d in delta.delta[j].items():
            best = max(best, d + p[k])
        out[j] = best
    return out


def prune_by_horizon(delta: DeltaMatrix, p: Mapping[int, int], limit: int) -> set[int]:
    """Jobs that cannot finish by ``limit`` even with unlimited resources."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    ec = earliest_completion(delta, p)
    return {j for j, c in ec.items() if c > limit}


def build_deltas(inst: Instance) -> DeltaMatrix:
    return longest_path_deltas(PrecGraph.from_instance(inst))

