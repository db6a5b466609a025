"""Line-oriented problem files.

::

    # comment
    vars: x1 x2 x3
    objective: x1*x2 + 2*x1*x3 + 2*x2*x3
    constraint: x1*x2*x3 - 1
    box: 0.1 5        # optional, one line per variable, in order
"""

from __future__ import annotations

from .exprcalc import ParseError, parse
from .kkt import Problem


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def parse_problem(text: str) -> Problem:
    variables = None
    objective = None
    constraints: list[tuple[int, str]] = []
    boxes: list[tuple[float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key, value = key.strip().lower(), value.strip()
        if not sep:
            raise ProblemFileError(f"expected '<field>: <value>', got {line!r}", lineno)
        if key == "vars":
            if variables is not None:
                raise ProblemFileError("duplicate vars line", lineno)
            variables = (tuple(value.split()), lineno)
            if not variables[0]:
                raise ProblemFileError("vars line lists no variables", lineno)
        elif key == "objective":
            if objective is not None:
                raise ProblemFileError("duplicate objective line", lineno)
            objective = (value, lineno)
        elif key == "constraint":
            constraints.append((lineno, value))
        elif key == "box":
            parts = value.split()
            try:
                lo, hi = (float(v) for v in parts)
            except ValueError:
                raise ProblemFileError("box needs two numbers: <lo> <hi>", lineno) from None
            if not lo < hi:
                raise ProblemFileError(f"empty box interval [{lo}, {hi}]", lineno)
            boxes.append((lo, hi))
        else:
            raise ProblemFileError(f"unknown field {key!r}", lineno)

    if variables is None:
        raise ProblemFileError("missing field 'vars'")
    if objective is None:
        raise ProblemFileError("missing field 'objective'")
    if not constraints:
        raise ProblemFileError("missing field 'constraint' (at least one is required)")
    names, vline = variables
    n = len(names)
    if boxes and len(boxes) != n:
        raise ProblemFileError(f"{len(boxes)} box lines for {n} variables")
    if len(constraints) >= n:
        raise ProblemFileError(f"{len(constraints)} constraints need more than {n} variables")
    try:
        parse("0", names)
    except ValueError as err:
        raise ProblemFileError(str(err), vline) from None

    def _expr(text: str, lineno: int):
        try:
            return parse(text, names)
        except ParseError as err:
            raise ProblemFileError(str(err), lineno) from None

    return Problem(
        names,
        _expr(*objective),
        tuple(_expr(t, ln) for ln, t in constraints),
        tuple(boxes),
    )


def read_problem(path: str) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def format_problem(p: Problem, comment: str = "") -> str:
    """Problem file text using canonical expression serialization."""
    lines = [f"# {comment}"] if comment else []
    lines.append("vars: " + " ".join(p.variables))
    lines.append(f"objective: {p.objective}")
    lines += [f"constraint: {g}" for g in p.constraints]
    lines += [f"box: {lo!r} {hi!r}" for lo, hi in p.box]
    return "\n".join(lines) + "\n"
