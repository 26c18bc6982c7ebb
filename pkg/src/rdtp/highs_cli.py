"""Run HiGHS on an MPS file and write a ``name value`` solution file.

Usage: ``python -m rdtp.highs_cli model.mps model.sol --gap 1e-4 --timeout 60``
"""

import argparse
import sys

import highspy


def _solve(path, gap, timeout, presolve=True):
    h = highspy.Highs()
    h.setOptionValue("output_flag", True)
    h.setOptionValue("log_to_console", True)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("mip_rel_gap", gap)
    h.setOptionValue("time_limit", timeout)
    if not presolve:
        h.setOptionValue("presolve", "off")
    if h.readModel(path) == highspy.HighsStatus.kError:
        raise SystemExit(f"cannot read {path}")
    h.run()
    return h


def main(argv=None):
    ap = argparse.ArgumentParser(prog="rdtp.highs_cli")
    ap.add_argument("mps")
    ap.add_argument("sol")
    ap.add_argument("--gap", type=float, default=1e-4)
    ap.add_argument("--timeout", type=float, default=3600.0)
    args = ap.parse_args(argv)

    S = highspy.HighsModelStatus
    h = _solve(args.mps, args.gap, args.timeout)
    ms = h.getModelStatus()
    if ms == S.kUnboundedOrInfeasible:
        h = _solve(args.mps, args.gap, args.timeout, presolve=False)
        ms = h.getModelStatus()
    info = h.getInfo()
    has_primal = info.primal_solution_status == 2
    if ms == S.kOptimal:
        status = "optimal"
    elif ms == S.kInfeasible:
        status = "infeasible"
    elif has_primal and ms in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        status = "feasible-gap"
    else:
        status = "error"
    with open(args.sol, "w") as fh:
        fh.write(f"# status {status}\n")
        fh.write(f"# message {h.modelStatusToString(ms)}\n")
        if status in ("optimal", "feasible-gap"):
            fh.write(f"# objective {info.objective_function_value!r}\n")
            names = h.getLp().col_names_
            for name, val in zip(names, h.getSolution().col_value):
                fh.write(f"{name} {float(val)!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
