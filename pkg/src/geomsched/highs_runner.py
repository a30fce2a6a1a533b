"""Bundled solver command: solve an LP file with HiGHS and write "name value" lines.

    python3 -m geomsched.highs_runner MODEL SOLUTION [--time-limit S] [--mip-gap G]

Exit codes: 0 optimal, 1 error, 2 infeasible, 3 time limit with incumbent,
4 time limit without incumbent.
"""

import argparse
import sys


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="geomsched.highs_runner")
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--mip-gap", type=float, default=0.0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", args.threads)
    h.setOptionValue("mip_rel_gap", args.mip_gap)
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    S = highspy.HighsModelStatus
    if status in (S.kInfeasible, S.kUnboundedOrInfeasible):
        return 2
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2  # feasible point available
    if has_sol:
        lp = h.getLp()
        names = lp.col_names_
        values = h.getSolution().col_value
        with open(args.solution, "w") as fh:
            for name, v in zip(names, values):
                fh.write(f"{name} {v:.10g}\n")
    if status == S.kOptimal:
        return 0 if has_sol else 1
    if status in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        return 3 if has_sol else 4
    print(f"solver status {h.modelStatusToString(status)}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
