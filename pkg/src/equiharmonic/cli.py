"""Command-line entry point: ``equiharmonic trace|solve|verify|list``.

Exit codes: 0 success, 2 invalid input, 3 aborted trace, 4 no solution
found, 5 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .continuation import (
    DEFAULT_DXI,
    OuterNoConvergence,
    SingularOuterJacobian,
    TraceAborted,
    find_signature_for_target,
    solve_for_mu,
    trace_curve,
)
from .expression import ExpressionError
from .io import ProblemFileError, load_problem, problem_from_dict, read_curve_json, write_curve_csv, write_curve_json
from .problems import UnknownProblem, list_builtins
from .verify import verify_initial_data

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ABORTED = 3
EXIT_NONE_FOUND = 4
EXIT_VERIFY_FAILED = 5


class UsageError(Exception):
    pass


def _pairs(text: str) -> dict[int, float]:
    """Parse ``k=v,k=v`` into {k: v}."""
    out = {}
    try:
        for part in text.split(","):
            k, v = part.split("=")
            out[int(k)] = float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected k=v[,k=v...], got {text!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equiharmonic",
                                     description="Solution curves of resonant two-point problems with a prescribed "
                                                 "harmonic signature.")
    sub = parser.add_subparsers(dest="command", required=True)

    def problem_args(p, required=True):
        p.add_argument("--problem", required=required, help="builtin name or path to a JSON problem file")
        p.add_argument("--n", type=int, default=None, dest="n_intervals", help="grid intervals N (even)")

    t = sub.add_parser("trace", help="trace mu(xi) over a range of one signature component")
    problem_args(t)
    t.add_argument("--xi-from", type=float, required=True)
    t.add_argument("--xi-to", type=float, required=True)
    t.add_argument("--dxi", type=float, default=None, help=f"mesh spacing (default {DEFAULT_DXI})")
    t.add_argument("--free-harmonic", type=int, default=None)
    t.add_argument("--fixed", type=_pairs, default=None, help="values of the other components, k=v,...")
    t.add_argument("--out", required=True, help="output path ending in .csv or .json")
    t.add_argument("--full", action="store_true", help="embed u samples in JSON output")

    s = sub.add_parser("solve", help="find solutions for a given mu")
    problem_args(s)
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--mu", type=float, help="target mu for the free harmonic (needs a xi range)")
    mode.add_argument("--mu-target", type=_pairs, help="target for every harmonic, k=v,...")
    s.add_argument("--xi-from", type=float)
    s.add_argument("--xi-to", type=float)
    s.add_argument("--dxi", type=float, default=None)
    s.add_argument("--free-harmonic", type=int, default=None)
    s.add_argument("--fixed", type=_pairs, default=None)

    v = sub.add_parser("verify", help="re-check stored records by reintegration")
    v.add_argument("--in", dest="infile", required=True, help="curve JSON written by trace")
    v.add_argument("--problem", default=None, help="problem to check against (default: the one stored in the file)")

    sub.add_parser("list", help="list builtin problems")
    return parser


def _load(args):
    return load_problem(args.problem, args.n_intervals)


def cmd_trace(args) -> int:
    suffix = Path(args.out).suffix.lower()
    if suffix not in (".csv", ".json"):
        raise UsageError(f"--out must end in .csv or .json, got {args.out!r}")
    loaded = _load(args)
    dxi = args.dxi or loaded.dxi or DEFAULT_DXI
    code = EXIT_OK
    try:
        curve = trace_curve(loaded.problem, args.xi_from, args.xi_to, dxi, args.free_harmonic, args.fixed,
                            **loaded.newton_kw)
    except TraceAborted as exc:
        curve = exc.curve
        print(f"trace aborted: {exc}", file=sys.stderr)
        code = EXIT_ABORTED
    if suffix == ".csv":
        write_curve_csv(curve, args.out)
    else:
        write_curve_json(curve, args.out, full=args.full)
    print(f"wrote {len(curve.records)} records to {args.out}")
    return code


def _print_solution(r, harmonics):
    xi = " ".join(f"xi_{k}={r.xi[k]:.12g}" for k in harmonics)
    mu = " ".join(f"mu_{k}={r.mu[k]:.12g}" for k in harmonics)
    print(f"{xi} {mu} uprime0={r.uprime0:.12g} residual={r.residual_sup:.3g}")


def cmd_solve(args) -> int:
    loaded = _load(args)
    problem = loaded.problem
    if args.mu_target is not None:
        try:
            rec = find_signature_for_target(problem, args.mu_target, **loaded.newton_kw)
        except (OuterNoConvergence, SingularOuterJacobian) as exc:
            print(f"no solution: {exc}")
            return EXIT_NONE_FOUND
        found = [rec]
    else:
        if args.xi_from is None or args.xi_to is None:
            raise UsageError("--mu needs --xi-from and --xi-to")
        try:
            curve = trace_curve(problem, args.xi_from, args.xi_to, args.dxi or loaded.dxi or DEFAULT_DXI,
                                args.free_harmonic, args.fixed, **loaded.newton_kw)
        except TraceAborted as exc:
            print(f"trace aborted: {exc}", file=sys.stderr)
            return EXIT_ABORTED
        found = solve_for_mu(curve, args.mu, **loaded.newton_kw)
    print(f"{len(found)} solution(s)")
    for r in found:
        _print_solution(r, problem.harmonics)
    return EXIT_OK if found else EXIT_NONE_FOUND


def cmd_verify(args) -> int:
    stored = read_curve_json(args.infile)
    if args.problem is None:
        problem = problem_from_dict(stored.problem, stored.n_intervals).problem
    else:
        problem = load_problem(args.problem, stored.n_intervals).problem
    if problem.fingerprint() != stored.fingerprint:
        raise UsageError(f"{args.infile} was computed for a different problem "
                         f"(fingerprint {stored.fingerprint}, expected {problem.fingerprint()})")
    failures = 0
    print(f"{'row':>4} {'xi':>12} {'|v(L)|':>10} {'max defect':>10} result")
    for i, r in enumerate(stored.records):
        u = None if r.u is None else problem.grid.function(r.u)
        rep = verify_initial_data(problem, r.xi, r.mu, r.uprime0, u=u, sup_norm_u=r.sup_norm_u)
        defect = max(rep.signature_defects.values(), default=float("nan"))
        status = "pass" if rep.passed else f"FAIL {rep.error}".rstrip()
        print(f"{i:>4} {r.xi[stored.k_free]:>12.6g} {rep.endpoint:>10.3g} {defect:>10.3g} {status}")
        failures += not rep.passed
    print(f"{len(stored.records) - failures}/{len(stored.records)} records pass")
    return EXIT_VERIFY_FAILED if failures else EXIT_OK


def cmd_list(args) -> int:
    for b in list_builtins():
        print(f"{b.name:<10} H={list(b.harmonics)}  G(u) = {b.nonlinearity};  e(x) = {b.forcing}")
        print(f"{'':<10} {b.note}")
    return EXIT_OK


COMMANDS = {"trace": cmd_trace, "solve": cmd_solve, "verify": cmd_verify, "list": cmd_list}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (UnknownProblem, ProblemFileError, ExpressionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
