"""Geometric time aggregation for project scheduling with a net-present-value objective.

Public names are imported lazily so that ``python3 -m geomsched.highs_runner``
starts without loading numba.
"""

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "Instance": "model", "Job": "model", "ResourceProfile": "model", "Semantics": "model",
    "AtSchedule": "model", "AggSchedule": "model", "SolveReport": "model", "SolveStatus": "model",
    "validate_instance": "model",
    "IntervalGrid": "grid", "build_grid": "grid", "interval_of": "grid", "gamma_bound": "grid",
    "convert_rate": "grid",
    "PrecGraph": "graph", "transitive_closure": "graph", "longest_path_deltas": "graph",
    "interval_transitive_reduction": "graph", "topological_order": "graph",
    "max_closure_preprocess": "graph", "prune_by_horizon": "graph",
    "FormulationKind": "mip", "MipModel": "mip", "build_orig_at": "mip", "build_agg_at": "mip",
    "build_agg_by": "mip",
    "write_lp": "lpformat", "parse_lp": "lpformat",
    "SolverConfig": "solvers", "solve_external": "solvers", "solve_bruteforce": "solvers",
    "disaggregate": "reconstruct",
    "npv": "evaluation", "npv_hat": "evaluation", "check_feasible_at": "evaluation",
    "check_feasible_agg": "evaluation", "lift_to_agg": "evaluation", "gap": "evaluation",
    "parse_psplib": "instances", "parse_json": "instances", "write_json": "instances",
    "load_instance": "instances",
    "RunConfig": "pipeline", "run_pipeline": "pipeline",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    mod = _EXPORTS.get(name)
    if mod is None:
        raise AttributeError(f"module 'geomsched' has no attribute {name!r}")
    return getattr(importlib.import_module(f".{mod}", __name__), name)
