"""Built-in worked examples with their known critical points.

Each case stores the problem as formula text (so it can be exported as a
problem file) and the exact critical points, multipliers, objective values
and expected verdicts. :func:`run_case` re-derives everything through the
solver and classifier and reports one check per property.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classify import ClassificationReport, Verdict, classify
from .exprcalc import evaluate
from .kkt import CriticalPoint, Problem, SearchResult, SolverConfig, kkt_residual, multistart

CBRT2 = 2.0 ** (1.0 / 3.0)
CBRT4 = 4.0 ** (1.0 / 3.0)

MATCH_TOL = 1e-6
STATIONARITY_TOL = 1e-8
VALUE_TOL = 1e-9

SEPTIC = "1/7*x1^7 - 17/12*x1^6 + 51/10*x1^5 - 63/8*x1^4 + 9/2*x1^3"
_SEPTIC_COEFFS = {7: Fraction(1, 7), 6: Fraction(-17, 12), 5: Fraction(51, 10),
                  4: Fraction(-63, 8), 3: Fraction(9, 2)}


def septic_value(t: Fraction) -> Fraction:
    return sum(c * t**k for k, c in _SEPTIC_COEFFS.items())


@dataclass(frozen=True)
class ExpectedPoint:
    x: tuple[float, ...]
    lam: tuple[float, ...]
    verdict: Verdict
    f_value: float
    f_exact: str = ""
    annotation: str = ""


@dataclass(frozen=True)
class CorpusCase:
    id: str
    summary: str
    variables: tuple[str, ...]
    objective: str
    constraints: tuple[str, ...]
    box: tuple[tuple[float, float], ...] | None
    expected_points: tuple[ExpectedPoint, ...]
    global_note: str = ""
    wide_box: tuple[tuple[float, float], ...] | None = None

    @property
    def problem(self) -> Problem:
        return Problem.from_text(self.variables, self.objective, self.constraints, self.box)

    def problem_with_box(self, box) -> Problem:
        return Problem.from_text(self.variables, self.objective, self.constraints, box)

    def problem_file(self) -> str:
        lines = [f"# {self.id}: {self.summary}", "vars: " + " ".join(self.variables),
                 f"objective: {self.objective}"]
        lines += [f"constraint: {c}" for c in self.constraints]
        for lo, hi in self.box or ():
            lines.append(f"box: {lo!r} {hi!r}")
        return "\n".join(lines) + "\n"


def corpus_cases() -> list[CorpusCase]:
    f_hat, f_star, f_tilde = (septic_value(Fraction(t)) for t in (1, Fraction(3, 2), 3))
    V2 = ("x1", "x2")
    V3 = ("x1", "x2", "x3")
    return [
        CorpusCase(
            id="local-not-global-3d",
            summary="unique critical point, a strict local min that is not global",
            variables=V3,
            objective="x1^2 + x2^2*(1 - x1)^3",
            constraints=("x3",),
            box=((-2.0, 2.0),) * 3,
            expected_points=(
                ExpectedPoint(
                    (0.0, 0.0, 0.0), (0.0,), Verdict.STRICT_LOCAL_MIN, 0.0, "0",
                    "local min but not global; f(4,1,0) = -11",
                ),
            ),
            global_note="not a global minimizer: f(4,1,0) = -11 < 0 (claimed only critical point)",
            wide_box=((-5.0, 5.0),) * 3,
        ),
        CorpusCase(
            id="min-area-box",
            summary="open box of unit volume with least surface area",
            variables=V3,
            objective="x1*x2 + 2*x1*x3 + 2*x2*x3",
            constraints=("x1*x2*x3 - 1",),
            box=((0.1, 5.0),) * 3,
            expected_points=(
                ExpectedPoint(
                    (CBRT2, CBRT2, CBRT2 / 2), (-2.0 * CBRT4,), Verdict.STRICT_LOCAL_MIN,
                    3.0 * CBRT4, "3*4^(1/3)",
                ),
            ),
            global_note="global minimizer (by a compactness argument on {f <= 5})",
        ),
        CorpusCase(
            id="septic-saddles",
            summary="smallest critical value is not attained at a minimizer",
            variables=V2,
            objective=SEPTIC,
            constraints=("x2",),
            box=None,
            expected_points=(
                ExpectedPoint((0.0, 0.0), (0.0,), Verdict.INDETERMINATE, 0.0, "0",
                              "saddle (needs higher-order analysis)"),
                ExpectedPoint((1.0, 0.0), (0.0,), Verdict.STRICT_LOCAL_MAX, float(f_hat),
                              f"{f_hat} ~ 0.4511"),
                ExpectedPoint((1.5, 0.0), (0.0,), Verdict.STRICT_LOCAL_MIN, float(f_star),
                              f"{f_star} ~ 0.3525"),
                ExpectedPoint((3.0, 0.0), (0.0,), Verdict.INDETERMINATE, float(f_tilde),
                              f"{f_tilde} ~ 2.6035", "saddle (needs higher-order analysis)"),
            ),
        ),
        CorpusCase(
            id="cubic-parabola",
            summary="cubic objective on a parabola: one local min, one local max",
            variables=V2,
            objective="x2 - x1^3 + x1",
            constraints=("x2 - x1^2",),
            box=None,
            expected_points=(
                ExpectedPoint((-1.0 / 3.0, 1.0 / 9.0), (-1.0,), Verdict.STRICT_LOCAL_MIN,
                              -5.0 / 27.0, "-5/27",
                              "local min not global: f(2,4) = -2 < -5/27"),
                ExpectedPoint((1.0, 1.0), (-1.0,), Verdict.STRICT_LOCAL_MAX, 1.0, "1"),
            ),
        ),
        CorpusCase(
            id="cone-plane",
            summary="lowest point of a cone cut by a plane",
            variables=V3,
            objective="x3",
            constraints=("x1^2 + x2^2 - x3^2", "x1 + x3 - 2"),
            box=None,
            expected_points=(
                ExpectedPoint((1.0, 0.0, 1.0), (0.25, -0.5), Verdict.STRICT_LOCAL_MIN, 1.0, "1"),
            ),
            global_note="global minimizer: on the feasible set 4(x3 - 1) = x2^2 >= 0",
        ),
    ]


def get_case(case_id: str) -> CorpusCase:
    for case in corpus_cases():
        if case.id == case_id:
            return case
    raise KeyError(case_id)


# --------------------------------------------------------------------------
# verification


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CaseResult:
    case: CorpusCase
    search: SearchResult
    reports: list[ClassificationReport]
    checks: list[Check] = field(default_factory=list)

    @property
    def points(self) -> list[CriticalPoint]:
        return self.search.points

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def pair_points(found: list[CriticalPoint], expected) -> list[int] | None:
    """Index into ``found`` of the nearest point for each expected point."""
    if len(found) != len(expected):
        return None
    idx = []
    for e in expected:
        d = [np.linalg.norm(cp.x - np.array(e.x)) for cp in found]
        idx.append(int(np.argmin(d)))
    return idx if len(set(idx)) == len(idx) else None


def _match_checks(label: str, case: CorpusCase, found: list[CriticalPoint], tol: float):
    checks = []
    order = pair_points(found, case.expected_points)
    if order is None:
        checks.append(Check(f"{label}count", False,
                            f"found {len(found)}, expected {len(case.expected_points)}"))
        return checks, None
    checks.append(Check(f"{label}count", True, f"{len(found)} point(s)"))
    dx = max(np.max(np.abs(found[i].x - np.array(e.x))) for i, e in zip(order, case.expected_points))
    dl = max(np.max(np.abs(found[i].lam - np.array(e.lam))) for i, e in zip(order, case.expected_points))
    checks.append(Check(f"{label}x", dx <= tol, f"max |dx| = {dx:.3g}"))
    checks.append(Check(f"{label}lambda", dl <= tol, f"max |dlambda| = {dl:.3g}"))
    return checks, order


def run_case(case: CorpusCase, cfg: SolverConfig = SolverConfig()) -> CaseResult:
    p = case.problem
    checks = []
    worst_r = max(
        np.max(np.abs(kkt_residual(p, e.x, e.lam))) for e in case.expected_points
    )
    checks.append(Check("expected stationarity", worst_r <= STATIONARITY_TOL, f"{worst_r:.3g}"))
    worst_f = max(abs(evaluate(p.objective, e.x) - e.f_value) for e in case.expected_points)
    checks.append(Check("expected f-values", worst_f <= VALUE_TOL, f"{worst_f:.3g}"))

    search = multistart(p, cfg)
    found = search.points
    reports = [classify(p, cp) for cp in found]
    more, order = _match_checks("", case, found, MATCH_TOL)
    checks += more
    if order is not None:
        got = [reports[i].verdict for i in order]
        want = [e.verdict for e in case.expected_points]
        checks.append(Check("verdicts", got == want, ", ".join(v.value for v in got)))
    if case.wide_box is not None:
        wide = multistart(case.problem_with_box(case.wide_box), cfg).points
        more, _ = _match_checks("wide-box ", case, wide, MATCH_TOL)
        checks += more
    return CaseResult(case, search, reports, checks)
