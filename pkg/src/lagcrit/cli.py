"""Command-line interface.

Exit codes: 0 success, 1 a check or corpus case failed, 2 usage, file or
parse error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

import numpy as np

from . import corpus
from .classify import classify
from .exprcalc import DomainError, fd_gradient, fd_hessian, jet
from .kkt import Problem, SolverConfig, multistart
from .problemfile import ProblemFileError, read_problem
from .report import build_report, dumps, rank_section, render_rank_text, render_text

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CHECK_GRAD_TOL = 1e-4


class UsageError(Exception):
    pass


def _config(args) -> SolverConfig:
    kw = {"rng_seed": args.seed}
    if args.starts is not None:
        kw["starts"] = args.starts
    if args.tol is not None:
        kw["stationarity_tol"] = args.tol
    try:
        return SolverConfig(**kw)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _load(path: str) -> Problem:
    try:
        return read_problem(path)
    except OSError as err:
        raise UsageError(f"{path}: {err.strerror}") from None
    except (ProblemFileError, ValueError) as err:
        raise UsageError(f"{path}: {err}") from None


def solve_problem(p: Problem, cfg: SolverConfig) -> dict:
    search = multistart(p, cfg)
    return build_report(p, cfg, search, [classify(p, cp) for cp in search.points])


def cmd_solve(args) -> int:
    p = _load(args.path)
    report = solve_problem(p, _config(args))
    print(dumps(report) if args.json else render_text(report))
    return EXIT_OK


def cmd_rank(args) -> int:
    p = _load(args.path)
    report = solve_problem(p, _config(args))
    ranking = rank_section(report)
    if args.json:
        report["ranking"] = ranking
        print(dumps(report))
    else:
        print(render_rank_text(report, ranking))
    return EXIT_OK


def cmd_corpus(args) -> int:
    cases = corpus.corpus_cases()
    if args.action == "list":
        for case in cases:
            print(f"{case.id:<22} {case.summary}")
        return EXIT_OK
    if args.action == "export":
        if not args.case_id:
            raise UsageError("corpus export needs a case id")
        try:
            case = corpus.get_case(args.case_id)
        except KeyError:
            raise UsageError(f"unknown corpus case {args.case_id!r}") from None
        sys.stdout.write(case.problem_file())
        return EXIT_OK

    cfg = _config(args)
    results = [corpus.run_case(case, cfg) for case in cases]
    if args.json:
        out = {
            "config": asdict(cfg),
            "cases": [
                {
                    "id": r.case.id,
                    "passed": r.passed,
                    "checks": [
                        {"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                        for c in r.checks
                    ],
                    "report": build_report(r.case.problem, cfg, r.search, r.reports),
                }
                for r in results
            ],
            "passed": all(r.passed for r in results),
        }
        print(dumps(out))
    else:
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.case.id}")
            for c in r.checks:
                print(f"      {'ok ' if c.passed else 'BAD'} {c.name}: {c.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _rel_err(ad: np.ndarray, fd: np.ndarray) -> float:
    return float(np.max(np.abs(ad - fd)) / (1.0 + np.max(np.abs(ad))))


def cmd_check_grad(args) -> int:
    p = _load(args.path)
    try:
        x = np.array([float(v) for v in args.point.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse point {args.point!r}") from None
    if x.shape != (p.n,) or not np.all(np.isfinite(x)):
        raise UsageError(f"point needs {p.n} finite coordinates")
    worst = 0.0
    domain_failure = False
    exprs = [("objective", p.objective)] + [
        (f"constraint {i}", g) for i, g in enumerate(p.constraints)
    ]
    np.set_printoptions(precision=10, suppress=False)
    for label, e in exprs:
        print(f"{label}: {e}")
        try:
            j = jet(e, x)
            fg, fh = fd_gradient(e, x), fd_hessian(e, x)
        except DomainError as err:
            print(f"  domain error: {err}")
            domain_failure = True
            continue
        eg, eh = _rel_err(j.g, fg), _rel_err(j.h, fh)
        worst = max(worst, eg, eh)
        print(f"  AD gradient {j.g}")
        print(f"  FD gradient {fg}")
        print(f"  gradient rel. error {eg:.3g}")
        print("  AD Hessian\n" + _indent(j.h))
        print("  FD Hessian\n" + _indent(fh))
        print(f"  Hessian rel. error {eh:.3g}")
    if domain_failure:
        return EXIT_USAGE
    print(f"max relative error {worst:.3g} ({'ok' if worst <= CHECK_GRAD_TOL else 'FAIL'})")
    return EXIT_OK if worst <= CHECK_GRAD_TOL else EXIT_FAIL


def _indent(a: np.ndarray) -> str:
    return "\n".join("    " + line for line in str(a).splitlines())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lagcrit",
        description="Find and classify critical points of equality-constrained problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--starts", type=int, default=None, help="multistart seeds (default 64)")
        sp.add_argument("--seed", type=int, default=0, help="seed for the start sequence")
        sp.add_argument("--tol", type=float, default=None,
                        help="stationarity tolerance (default 1e-9)")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("solve", help="find and classify critical points")
    sp.add_argument("path")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("rank", help="rank critical points by objective value, with caveats")
    sp.add_argument("path")
    solver_flags(sp)
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("corpus", help="built-in examples: list, run, export <id>")
    sp.add_argument("action", choices=["list", "run", "export"])
    sp.add_argument("case_id", nargs="?")
    solver_flags(sp)
    sp.set_defaults(func=cmd_corpus)

    sp = sub.add_parser("check-grad", help="compare exact and finite-difference derivatives")
    sp.add_argument("path")
    sp.add_argument("--point", required=True, help='comma separated, e.g. "1,2,0.5"')
    sp.set_defaults(func=cmd_check_grad)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"lagcrit: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
