"""Report assembly and rendering (JSON and plain text)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from typing import Any

import numpy as np

from .classify import ClassificationReport, Verdict
from .exprcalc import evaluate
from .kkt import Problem, SearchResult, SolverConfig

RANK_CAVEATS = (
    "Reading the smallest value off this list as the global minimum is only valid when "
    "a global minimizer exists and is attained,",
    "when it lies in the interior of the common domain of the objective and constraints "
    "(not on its boundary),",
    "when the constraint gradients are linearly independent everywhere on that domain,",
    "and when every critical point has been found. None of these is verified here: the "
    "multistart search covers only the sample box and cannot prove it found them all.",
)


def fmt_float(x: float) -> str:
    """17 significant digits; always re-parses as the same float."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x}")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats written at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if obj is None:
        return "null"
    if isinstance(obj, Verdict):
        return json.dumps(obj.value)
    return json.dumps(str(obj))


def point_entry(p: Problem, rep: ClassificationReport) -> dict:
    cp = rep.point
    return {
        "x": [float(v) for v in cp.x],
        "lambda": [float(v) for v in cp.lam],
        "residual_norm": float(cp.residual_norm),
        "verdict": rep.verdict.value,
        "licq_ok": rep.licq_ok,
        "f_value": float(evaluate(p.objective, cp.x)),
        "eigenvalues": [float(v) for v in rep.eigenvalues],
        "specialized_check": None if rep.specialized_check is None else _check_dict(rep),
    }


def _check_dict(rep: ClassificationReport) -> dict:
    d = rep.specialized_check.to_dict()
    d["witnesses"] = {k: float(v) for k, v in d["witnesses"].items()}
    return d


def search_warnings(search: SearchResult, cfg: SolverConfig) -> list[str]:
    k = len(search.points)
    out = [
        f"found {k} critical point{'s' if k != 1 else ''} in the sample box from "
        f"{cfg.starts} starts; the search is not exhaustive"
    ]
    if k == 0:
        out.append("no critical point found; try more starts or a different box")
    if search.skipped:
        out.append(f"{search.skipped} start(s) skipped: outside the expressions' domain")
    return out


def build_report(
    p: Problem,
    cfg: SolverConfig,
    search: SearchResult,
    reports: list[ClassificationReport],
) -> dict:
    warnings = search_warnings(search, cfg)
    for rep in reports:
        if not rep.licq_ok:
            warnings.append(
                f"constraint gradients are dependent at x = {list(map(float, rep.point.x))}; "
                "no second-order verdict"
            )
    return {
        "problem": {
            "variables": list(p.variables),
            "objective": str(p.objective),
            "constraints": [str(g) for g in p.constraints],
            "box": [[lo, hi] for lo, hi in p.box],
        },
        "config": asdict(cfg),
        "critical_points": [point_entry(p, r) for r in reports],
        "warnings": warnings,
    }


def rank_section(report: dict) -> dict:
    """Critical points ordered by objective value, with the caveats attached."""
    pts = report["critical_points"]
    order = sorted(range(len(pts)), key=lambda i: (pts[i]["f_value"], i))
    warnings = []
    if not pts:
        warnings.append("no critical points found, nothing to rank")
    elif pts[order[0]]["verdict"] != Verdict.STRICT_LOCAL_MIN.value:
        best = pts[order[0]]
        warnings.append(
            f"the smallest critical value f = {best['f_value']:.10g} occurs at x = "
            f"{[round(v, 10) for v in best['x']]}, which is classified {best['verdict']}, "
            "not a strict local minimizer: the smallest critical value need not belong "
            "to a minimizer"
        )
    return {"order": order, "warnings": warnings, "caveats": list(RANK_CAVEATS)}


# --------------------------------------------------------------------------
# text rendering


def _vec(v, digits: int = 10) -> str:
    return "(" + ", ".join(f"{float(x):.{digits}g}" for x in v) + ")"


def render_text(report: dict) -> str:
    prob = report["problem"]
    lines = [
        "minimize   " + prob["objective"],
        *("subject to " + c + " = 0" for c in prob["constraints"]),
        "",
    ]
    pts = report["critical_points"]
    for i, pt in enumerate(pts):
        lines.append(f"[{i}] x = {_vec(pt['x'])}")
        lines.append(f"    lambda = {_vec(pt['lambda'])}  residual = {pt['residual_norm']:.3g}")
        lines.append(f"    f = {pt['f_value']:.12g}  verdict = {pt['verdict']}")
        if pt["eigenvalues"]:
            lines.append(f"    projected Hessian eigenvalues = {_vec(pt['eigenvalues'], 8)}")
        chk = pt["specialized_check"]
        if chk:
            wit = ", ".join(f"{k} = {v:.8g}" for k, v in chk["witnesses"].items()
                            if not k.endswith("_unit"))
            lines.append(f"    {chk['case']} test: {wit} -> {chk['verdict']}")
    lines += ["", *("warning: " + w for w in report["warnings"])]
    return "\n".join(lines)


def render_rank_text(report: dict, ranking: dict) -> str:
    pts = report["critical_points"]
    lines = ["rank  f-value              verdict          x"]
    for r, i in enumerate(ranking["order"], start=1):
        pt = pts[i]
        lines.append(f"{r:>4}  {pt['f_value']:<19.12g}  {pt['verdict']:<15}  {_vec(pt['x'])}")
    lines.append("")
    lines += ["warning: " + w for w in report["warnings"] + ranking["warnings"]]
    lines.append("")
    lines.append("caveats:")
    lines += ["  " + c for c in ranking["caveats"]]
    return "\n".join(lines)
