"""Time the numba kernels against their pure Python / numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each mode runs in its own interpreter because the JIT switch
(GEOMSCHED_DISABLE_JIT) is read once at import time.
"""

import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def _best(fn, repeat):
    fn()  # warm-up (pays numba compilation when the JIT is on)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run_workloads(repeat):
    import numpy as np

    sys.path.insert(0, str(ROOT / "tests"))
    from gen import random_instance
    from geomsched import kernels
    from geomsched._accel import JIT_ENABLED
    from geomsched.evaluation import agg_tables, at_tables
    from geomsched.graph import build_deltas, interval_transitive_reduction
    from geomsched.grid import build_grid
    from geomsched.instances import load_instance
    from geomsched.model import AggSchedule, Semantics
    from geomsched.reconstruct import reconstruct

    rng = np.random.default_rng(0)
    small = random_instance(rng, n_max=7, T_max=12, T_min=12, semantics=Semantics.CUMULATIVE)
    tab = at_tables(small)
    S = rng.integers(0, small.T + 1, size=(200_000, small.N))

    j120 = load_instance(str(ROOT / "tests" / "data" / "psplib" / "j1201_1.sm"))
    delta = build_deltas(j120)
    grid = build_grid(0.1, j120.T)

    j30 = load_instance(str(ROOT / "tests" / "data" / "psplib" / "j301_1.sm"))
    g30 = build_grid(1.0, j30.T)
    X = AggSchedule({job.id: g30.n_slots for job in j30.jobs})

    rows = {
        "search_best (N=%d, T=%d)" % (small.N, small.T): lambda: kernels.search_best(*tab.args(), tab.value),
        "batch_check (200k schedules)": lambda: kernels.batch_check(S, *tab.args()[1:]),
        "interval reduction (J120, eps=0.1, all slots)": lambda: [
            interval_transitive_reduction(delta, grid, t) for t in range(1, grid.n_slots + 1)
        ],
        "reconstruct (J30, cumulative ledger)": lambda: reconstruct(X, j30, g30, check=False),
        "reconstruct (J30, renewable ledger)": lambda: reconstruct(
            X, j30.with_semantics(Semantics.RENEWABLE), g30, check=False
        ),
    }
    return {"jit": JIT_ENABLED, "seconds": {k: _best(f, repeat) for k, f in rows.items()}}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        print(json.dumps(run_workloads(args.repeat)))
        return 0

    results = {}
    for label, flag in (("numba", "0"), ("fallback", "1")):
        env = dict(os.environ, GEOMSCHED_DISABLE_JIT=flag)
        out = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(out.stdout.strip().splitlines()[-1])
    assert results["numba"]["jit"] and not results["fallback"]["jit"]

    width = max(len(k) for k in results["numba"]["seconds"])
    print(f"{'workload':<{width}}  {'numba s':>10}  {'fallback s':>11}  {'speed-up':>8}")
    for name, t_jit in results["numba"]["seconds"].items():
        t_py = results["fallback"]["seconds"][name]
        print(f"{name:<{width}}  {t_jit:>10.4f}  {t_py:>11.4f}  {t_py / t_jit:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
