"""Command line: solve, bench, check, export-model, gamma."""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys

from . import bench as benchmod
from .evaluation import check_feasible_at
from .graph import build_deltas
from .grid import build_grid, gamma_bound
from .instances import DEFAULT_PROFIT, load_instance
from .lpformat import write_lp
from .mip import FormulationKind, build_model
from .model import AtSchedule, Semantics
from .pipeline import RunConfig, preprocess, run_pipeline
from .solvers import SolverConfig, default_solver_config


def _add_common(p: argparse.ArgumentParser, solver: bool = True):
    p.add_argument("--epsilon", type=float, default=1.0, help="aggregation parameter (default 1.0)")
    p.add_argument("--rate", type=float, default=None, help="per-period discount rate (PSPLib default 0.001)")
    p.add_argument("--semantics", choices=[s.value for s in Semantics], default=None)
    p.add_argument("--formulation", choices=[f.value for f in FormulationKind], default="agg-at")
    p.add_argument("--profit-default", type=float, default=DEFAULT_PROFIT, help="profit of non-dummy PSPLib jobs")
    p.add_argument("--alpha", type=float, default=None, help="nested-pit pruning with profits scaled by alpha")
    p.add_argument("--horizon-limit", type=int, default=None, help="drop jobs that cannot finish by this period")
    if solver:
        p.add_argument("--slot-start", choices=["interval", "slot"], default="interval",
                       help="earliest completion tried in slot s: floor(tau_{s-1})+1, or the slot's first period")
        p.add_argument("--solver-cmd", default=None,
                       help="command template with {model} and {solution}; 'oracle' = exhaustive search; "
                            "default $GEOMSCHED_SOLVER_CMD, else bundled HiGHS")
        p.add_argument("--time-limit", type=float, default=60.0)
        p.add_argument("--mip-gap", type=float, default=0.0)
    p.add_argument("--output", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def _solver(args) -> SolverConfig | None:
    if args.solver_cmd == "oracle":
        return None
    if args.solver_cmd:
        return SolverConfig(args.solver_cmd, args.time_limit, args.mip_gap)
    cfg = default_solver_config(args.time_limit, args.mip_gap)
    if cfg is None:
        raise SystemExit("no MIP solver: set --solver-cmd or GEOMSCHED_SOLVER_CMD, or install highspy")
    return cfg


def _config(args) -> RunConfig:
    return RunConfig(
        epsilon=args.epsilon, rate=args.rate, semantics=args.semantics, formulation=args.formulation,
        solver=_solver(args), profit_default=args.profit_default, horizon_limit=args.horizon_limit,
        nested_pit_alpha=args.alpha, output=args.output, output_format=args.format, slot_start=args.slot_start,
    )


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_solve(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.instance, args.profit_default, args.rate, cfg.semantics)
    rep = run_pipeline(cfg, inst)
    d = rep.as_dict()
    d["instance"] = inst.name
    if args.format == "json":
        _emit(json.dumps(d, indent=1), args.output)
    else:
        keys = ["instance", "npv", "npv_hat_ub", "gap_pct", "gamma", "solver_status"]
        _emit(",".join(keys) + "\n" + ",".join("" if d[k] is None else str(d[k]) for k in keys), args.output)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    paths = sorted({p for pat in args.instances for p in glob.glob(pat)})
    epsilons = [float(e) for e in args.epsilons.split(",")] if args.epsilons else [args.epsilon]
    rows = benchmod.bench(cfg, paths, epsilons, args.jobs)
    summary = benchmod.summarize(rows)
    if args.format == "json":
        _emit(benchmod.to_json(rows, summary), args.output)
    else:
        _emit(benchmod.rows_to_csv(rows) + "\n" + benchmod.summary_to_csv(summary), args.output)
    return 0


def cmd_check(args) -> int:
    inst = load_instance(args.instance, args.profit_default, args.rate, args.semantics)
    with open(args.schedule) as fh:
        sched = AtSchedule.from_json(fh.read())
    rep = check_feasible_at(sched, inst)
    _emit(json.dumps(rep.as_dict(), indent=1), args.output)
    return 0 if rep.feasible else 3


def cmd_export(args) -> int:
    cfg = RunConfig(epsilon=args.epsilon, rate=args.rate, semantics=args.semantics, formulation=args.formulation,
                    horizon_limit=args.horizon_limit, nested_pit_alpha=args.alpha)
    inst = load_instance(args.instance, args.profit_default, args.rate, cfg.semantics)
    inst = preprocess(cfg, inst)
    grid = build_grid(cfg.epsilon, inst.T)
    delta = build_deltas(inst) if cfg.formulation.aggregated else None
    _emit(write_lp(build_model(cfg.formulation, inst, grid, delta)), args.output)
    return 0


def cmd_gamma(args) -> int:
    g = gamma_bound(args.rate, args.horizon, args.epsilon)
    _emit(json.dumps({"rate": args.rate, "T": args.horizon, "epsilon": args.epsilon, "gamma": g})
          if args.format == "json" else f"{g:.12g}", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geomsched", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the pipeline on one instance")
    p.add_argument("instance")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("bench", help="run many instances and epsilons")
    p.add_argument("instances", nargs="+", help="files or glob patterns")
    p.add_argument("--epsilons", default=None, help="comma-separated list; overrides --epsilon")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("check", help="verify a completion-period schedule (exit 3 when infeasible)")
    p.add_argument("instance")
    p.add_argument("schedule", help='JSON map job id -> completion period, e.g. {"1": 1, "2": 3}')
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--semantics", choices=[s.value for s in Semantics], default=None)
    p.add_argument("--profit-default", type=float, default=DEFAULT_PROFIT)
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("export-model", help="write the LP model without solving")
    p.add_argument("instance")
    _add_common(p, solver=False)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("gamma", help="print the approximation factor")
    p.add_argument("--rate", type=float, required=True, help="per-period rate")
    p.add_argument("--horizon", type=float, required=True, help="T in the same periods as --rate")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_gamma)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (OSError, ValueError, RuntimeError) as e:
        print(f"geomsched: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
