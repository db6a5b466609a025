"""Critical points of equality-constrained problems and their second-order classification."""

from .classify import ClassificationReport, SpecializedCheck, Verdict, classify
from .corpus import CorpusCase, corpus_cases, run_case
from .exprcalc import DomainError, Expression, ParseError, evaluate, gradient, hessian, parse
from .kkt import (
    CriticalPoint,
    Problem,
    SolverConfig,
    find_critical_points,
    kkt_jacobian,
    kkt_residual,
    lagrangian_hessian,
    solve_from,
)

__all__ = [
    "ClassificationReport",
    "CorpusCase",
    "CriticalPoint",
    "DomainError",
    "Expression",
    "ParseError",
    "Problem",
    "SolverConfig",
    "SpecializedCheck",
    "Verdict",
    "classify",
    "corpus_cases",
    "evaluate",
    "find_critical_points",
    "gradient",
    "hessian",
    "kkt_jacobian",
    "kkt_residual",
    "lagrangian_hessian",
    "parse",
    "run_case",
    "solve_from",
]
