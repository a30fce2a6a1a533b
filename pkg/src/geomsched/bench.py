"""Batch runs over instance files: one row per (instance, epsilon) plus a
per-epsilon summary (instances solved, average solve time, average gap)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

from .instances import load_instance
from .model import SolveStatus
from .pipeline import RunConfig, run_pipeline


@dataclass(frozen=True)
class BenchRow:
    instance: str
    epsilon: float
    semantics: str
    status: str
    solve_seconds: float
    npv: float
    npv_hat_ub: float | None
    gap_pct: float | None
    gamma: float


COLUMNS = [f.name for f in fields(BenchRow)]


@dataclass(frozen=True)
class SummaryRow:
    epsilon: float
    instances: int
    solved: int
    avg_time: float
    avg_gap: float | None


def _run_one(args) -> BenchRow:
    path, eps, cfg = args
    name = os.path.splitext(os.path.basename(path))[0]
    sem = cfg.semantics.value if cfg.semantics is not None else ""
    try:
        inst = load_instance(path, cfg.profit_default, cfg.rate, cfg.semantics)
        rep = run_pipeline(replace(cfg, epsilon=eps), inst)
    except Exception:  # recorded as an Error row; the batch continues
        return BenchRow(name, eps, sem or "?", SolveStatus.ERROR.value, math.nan, math.nan, None, None, math.nan)
    return BenchRow(name, eps, inst.semantics.value, rep.solver_status.value, rep.wall_times.get("solve", math.nan),
                    rep.npv, rep.npv_hat_ub, rep.gap_pct, rep.gamma)


def bench(cfg: RunConfig, paths: list[str], epsilons: list[float], jobs: int = 1) -> list[BenchRow]:
    if not paths:
        raise ValueError("no instance files matched")
    tasks = [(p, float(e), cfg) for p in paths for e in epsilons]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_run_one, tasks))
    else:
        rows = [_run_one(t) for t in tasks]
    return sorted(rows, key=lambda r: (r.instance, r.epsilon))


def summarize(rows: list[BenchRow]) -> list[SummaryRow]:
    out = []
    for eps in sorted({r.epsilon for r in rows}):
        sub = [r for r in rows if r.epsilon == eps]
        solved = [r for r in sub if r.status == SolveStatus.OPTIMAL.value]
        gaps = [r.gap_pct for r in solved if r.gap_pct is not None]
        avg_t = sum(r.solve_seconds for r in solved) / len(solved) if solved else math.nan
        out.append(SummaryRow(eps, len(sub), len(solved), avg_t, sum(gaps) / len(gaps) if gaps else None))
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[BenchRow]:
    rd = csv.DictReader(io.StringIO(text))
    if rd.fieldnames != COLUMNS:
        raise ValueError(f"unexpected columns {rd.fieldnames}")
    out = []
    for d in rd:
        out.append(BenchRow(
            d["instance"], float(d["epsilon"]), d["semantics"], d["status"], float(d["solve_seconds"]),
            float(d["npv"]), float(d["npv_hat_ub"]) if d["npv_hat_ub"] else None,
            float(d["gap_pct"]) if d["gap_pct"] else None, float(d["gamma"]),
        ))
    return out


def summary_to_csv(summary: list[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "instances", "solved", "avg_time", "avg_gap"])
    for s in summary:
        w.writerow([_cell(s.epsilon), s.instances, s.solved, _cell(s.avg_time), _cell(s.avg_gap)])
    return buf.getvalue()


def to_json(rows: list[BenchRow], summary: list[SummaryRow]) -> str:
    def clean(d):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}

    return json.dumps({"rows": [clean(asdict(r)) for r in rows], "summary": [clean(asdict(s)) for s in summary]}, indent=1)
