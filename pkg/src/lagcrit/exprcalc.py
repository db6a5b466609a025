"""Formula parsing, evaluation and exact derivatives.

Expressions are small immutable trees. Derivatives are computed by
second-order forward mode: every node is evaluated to a :class:`Jet`
carrying value, gradient and Hessian, so first and second derivatives are
exact up to floating point and never rely on finite differences.  The
finite-difference routines at the bottom exist only as an oracle.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
BINARY_OPS = ("+", "-", "*", "/", "^")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class ExpressionError(ValueError):
    """Base class for parse and evaluation failures."""


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ExpressionError, ArithmeticError):
    """Raised when a node is evaluated outside its natural domain."""

    def __init__(self, message: str, node: "Node"):
        super().__init__(f"{message} in {serialize_node(node)}")
        self.node = node


# --------------------------------------------------------------------------
# tree nodes


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


Node = Union[Const, Var, Neg, Func, BinOp, Pow]


@dataclass(frozen=True)
class Expression:
    """Parsed scalar formula over ``arity`` named variables."""

    root: Node
    variables: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.variables)

    def __str__(self) -> str:
        return serialize(self)

    @cached_property
    def _jet(self):
        return _compile_jet(self.root, self.arity)

    @cached_property
    def _dual(self):
        return _compile_dual(self.root, self.arity)

    def evaluate(self, x) -> float:
        return evaluate(self, x)

    def gradient(self, x) -> np.ndarray:
        return gradient(self, x)

    def hessian(self, x) -> np.ndarray:
        return hessian(self, x)

    def scaled(self, c: float) -> "Expression":
        """Return the expression ``c * self``."""
        return Expression(BinOp("*", Const(float(c)), self.root), self.variables)

    def negated(self) -> "Expression":
        return Expression(Neg(self.root), self.variables)


# --------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.pos = 0
        self.index = {name: i for i, name in enumerate(variables)}

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            raise ParseError(f"expected {ch!r}, found {found}", self.pos)
        self.pos += 1

    def parse(self) -> Node:
        node = self.sum()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.pos)
        return node

    def sum(self) -> Node:
        node = self.product()
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.peek()
            self.pos += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek() == "-":
            self.pos += 1
            arg = self.unary()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Neg(arg)
        return self.power()

    def power(self) -> Node:
        node = self.primary()
        while self.peek() == "^":
            self.pos += 1
            start = self._exponent_start()
            exp = self.exponent()
            if _has_vars(exp):
                raise ParseError("non-constant exponent", start)
            try:
                value = _eval_const(exp)
            except DomainError as err:
                raise ParseError(f"invalid exponent ({err})", start) from None
            if not math.isfinite(value):
                raise ParseError("exponent is not finite", start)
            node = Pow(node, value)
        return node

    def _exponent_start(self) -> int:
        self._skip()
        return self.pos

    def exponent(self) -> Node:
        # a signed primary; further '^' associates to the left
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.exponent())
        return self.primary()

    def primary(self) -> Node:
        ch = self.peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            node = self.sum()
            self.expect(")")
            return node
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            value = float(m.group())
            if not math.isfinite(value):
                raise ParseError("numeric literal out of range", start)
            return Const(value)
        m = _IDENT.match(self.text, self.pos)
        if m:
            name = m.group()
            self.pos = m.end()
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Func(name, arg)
            if name not in self.index:
                raise ParseError(f"unknown identifier {name!r}", start)
            return Var(self.index[name], name)
        if not ch:
            raise ParseError("unexpected end of input", start)
        raise ParseError(f"unexpected {ch!r}", start)


def _has_vars(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Const):
        return False
    if isinstance(node, BinOp):
        return _has_vars(node.left) or _has_vars(node.right)
    if isinstance(node, Pow):
        return _has_vars(node.base)
    return _has_vars(node.arg)


def _eval_const(node: Node) -> float:
    return _value(node, np.zeros(0))


def parse(text: str, variables: Sequence[str]) -> Expression:
    """Parse ``text`` into an :class:`Expression` over ``variables``.

    Precedence from tightest: ``^``, unary minus, ``* /``, ``+ -``. Binary
    operators associate to the left. The exponent of ``^`` must be constant.
    """
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise ValueError(f"duplicate variable names in {variables}")
    for name in variables:
        if not _IDENT.fullmatch(name):
            raise ValueError(f"invalid variable name {name!r}")
        if name in FUNCTIONS:
            raise ValueError(f"variable name {name!r} clashes with a function")
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return Expression(_Parser(text, variables).parse(), variables)


def _fmt(value: float) -> str:
    return repr(float(value))


def _fmt_const(value: float) -> str:
    # parenthesized so the sign cannot bind to a neighbouring operator
    if math.copysign(1.0, value) < 0:
        return f"({_fmt(value)})"
    return _fmt(value)


def serialize_node(node: Node) -> str:
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{serialize_node(node.arg)})"
    if isinstance(node, Func):
        return f"{node.name}({serialize_node(node.arg)})"
    if isinstance(node, Pow):
        return f"({serialize_node(node.base)} ^ {_fmt(node.exponent)})"
    return f"({serialize_node(node.left)} {node.op} {serialize_node(node.right)})"


def serialize(e: Expression) -> str:
    """Canonical fully parenthesized text; ``parse`` inverts it."""
    return serialize_node(e.root)


# --------------------------------------------------------------------------
# evaluation


def _check_point(e: Expression, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (e.arity,):
        raise ValueError(f"point has shape {x.shape}, expected ({e.arity},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    return x


def _pow_value(node: Pow, b: float) -> float:
    p = node.exponent
    if b == 0.0 and p < 0:
        raise DomainError("zero raised to a negative power", node)
    if b < 0.0 and not float(p).is_integer():
        raise DomainError("negative base with non-integer exponent", node)
    return b**p


def _value(node: Node, x: np.ndarray) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(x[node.index])
    if isinstance(node, Neg):
        return -_value(node.arg, x)
    if isinstance(node, Pow):
        return _pow_value(node, _value(node.base, x))
    if isinstance(node, Func):
        u = _value(node.arg, x)
        if node.name == "ln":
            if u <= 0.0:
                raise DomainError("ln of non-positive argument", node)
            return math.log(u)
        if node.name == "sqrt":
            if u < 0.0:
                raise DomainError("sqrt of negative argument", node)
            return math.sqrt(u)
        if node.name == "exp":
            try:
                return math.exp(u)
            except OverflowError:
                raise DomainError("exp overflow", node) from None
        return getattr(math, node.name)(u)
    a = _value(node.left, x)
    b = _value(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0.0:
        raise DomainError("division by zero", node)
    return a / b


def evaluate(e: Expression, x) -> float:
    return _value(e.root, _check_point(e, x))


# --------------------------------------------------------------------------
# second-order forward mode


class Jet:
    """Value with exact gradient and Hessian with respect to the inputs.

    ``const`` marks jets known to have zero derivatives, which lets products
    and sums skip the array work.
    """

    __slots__ = ("v", "g", "h", "const")

    def __init__(self, v: float, g: np.ndarray, h: np.ndarray, const: bool = False):
        self.v = v
        self.g = g
        self.h = h
        self.const = const

    @classmethod
    def constant(cls, v: float, n: int) -> "Jet":
        return cls(v, np.zeros(n), np.zeros((n, n)), const=True)

    @classmethod
    def variable(cls, v: float, i: int, n: int) -> "Jet":
        g = np.zeros(n)
        g[i] = 1.0
        return cls(v, g, np.zeros((n, n)))

    def chain(self, f0: float, f1: float, f2: float) -> "Jet":
        """Compose with a scalar function having value f0 and derivatives f1, f2."""
        if self.const:
            return Jet(f0, self.g, self.h, const=True)
        return Jet(f0, f1 * self.g, f1 * self.h + f2 * np.outer(self.g, self.g))

    def __add__(self, o: "Jet") -> "Jet":
        if o.const:
            return Jet(self.v + o.v, self.g, self.h, self.const)
        if self.const:
            return Jet(self.v + o.v, o.g, o.h)
        return Jet(self.v + o.v, self.g + o.g, self.h + o.h)

    def __sub__(self, o: "Jet") -> "Jet":
        return self + (-o)

    def __neg__(self) -> "Jet":
        return Jet(-self.v, -self.g, -self.h, self.const)

    def __mul__(self, o: "Jet") -> "Jet":
        if self.const:
            return Jet(self.v * o.v, self.v * o.g, self.v * o.h, o.const)
        if o.const:
            return Jet(self.v * o.v, o.v * self.g, o.v * self.h)
        # outer(a,b) + outer(b,a) is bit-symmetric since + and * commute
        cross = np.outer(self.g, o.g) + np.outer(o.g, self.g)
        return Jet(
            self.v * o.v,
            self.v * o.g + o.v * self.g,
            self.v * o.h + o.v * self.h + cross,
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    # shared between calls, so never writable
    a.flags.writeable = False
    return a


def _compile_jet(node: Node, n: int):
    """Compile ``node`` into ``f(x) -> Jet`` (second-order forward mode)."""
    if isinstance(node, Const):
        c = node.value
        g0 = _frozen(np.zeros(n))
        h0 = _frozen(np.zeros((n, n)))
        return lambda x: Jet(c, g0, h0, const=True)
    if isinstance(node, Var):
        i = node.index
        unit = np.zeros(n)
        unit[i] = 1.0
        unit = _frozen(unit)
        h0 = _frozen(np.zeros((n, n)))
        return lambda x: Jet(float(x[i]), unit, h0)
    if isinstance(node, Neg):
        fa = _compile_jet(node.arg, n)
        return lambda x: -fa(x)
    if isinstance(node, Pow):
        fb = _compile_jet(node.base, n)
        p = node.exponent

        def power(x):
            u = fb(x)
            f0 = _pow_value(node, u.v)
            if p == 0.0:
                return Jet(1.0, u.g * 0.0, u.h * 0.0, const=True)
            if p == 1.0:
                return u
            if p == 2.0:
                return u.chain(f0, 2.0 * u.v, 2.0)
            if u.v == 0.0 and p < 2.0:
                raise DomainError("derivative undefined at zero base", node)
            return u.chain(f0, p * u.v ** (p - 1), p * (p - 1) * u.v ** (p - 2))

        return power
    if isinstance(node, Func):
        fa = _compile_jet(node.arg, n)
        rule = _FIRST_ORDER[node.name]
        second = _SECOND_DERIV[node.name]

        def func(x):
            u = fa(x)
            f0, f1 = rule(u.v, node)
            return u.chain(f0, f1, second(u.v, f0))

        return func
    fl = _compile_jet(node.left, n)
    fr = _compile_jet(node.right, n)
    op = node.op
    if op == "+":
        return lambda x: fl(x) + fr(x)
    if op == "-":
        return lambda x: fl(x) - fr(x)
    if op == "*":
        return lambda x: fl(x) * fr(x)

    def divide(x):
        a, b = fl(x), fr(x)
        if b.v == 0.0:
            raise DomainError("division by zero", node)
        return a * b.chain(1.0 / b.v, -1.0 / (b.v * b.v), 2.0 / (b.v * b.v * b.v))

    return divide


# second derivative of each function given argument v and value f0
_SECOND_DERIV = {
    "sin": lambda v, f0: -f0,
    "cos": lambda v, f0: -f0,
    "exp": lambda v, f0: f0,
    "ln": lambda v, f0: -1.0 / (v * v),
    "sqrt": lambda v, f0: -0.25 / (f0 * v),
}


def jet(e: Expression, x) -> Jet:
    """Value, gradient and Hessian of ``e`` at ``x`` in one pass."""
    out = e._jet(_check_point(e, x))
    h = 0.5 * (out.h + out.h.T)
    return Jet(float(out.v), np.array(out.g), h, out.const)


def _compile_dual(node: Node, n: int):
    """Compile ``node`` into ``f(x) -> (value, gradient or None)``.

    First-order forward mode, used where no Hessian is needed. A ``None``
    gradient marks a constant subtree and saves the array work.
    """
    if isinstance(node, Const):
        c = node.value
        return lambda x: (c, None)
    if isinstance(node, Var):
        unit = np.zeros(n)
        unit[node.index] = 1.0
        unit = _frozen(unit)
        i = node.index
        return lambda x: (x[i], unit)
    if isinstance(node, Neg):
        fa = _compile_dual(node.arg, n)

        def neg(x):
            v, g = fa(x)
            return -v, None if g is None else -g

        return neg
    if isinstance(node, Pow):
        fb = _compile_dual(node.base, n)
        p = node.exponent

        def power(x):
            v, g = fb(x)
            f0 = _pow_value(node, v)
            if g is None or p == 0.0:
                return f0, None
            if p == 1.0:
                return v, g
            if v == 0.0 and p < 1.0:
                raise DomainError("derivative undefined at zero base", node)
            return f0, (p * v ** (p - 1)) * g

        return power
    if isinstance(node, Func):
        fa = _compile_dual(node.arg, n)
        rule = _FIRST_ORDER[node.name]

        def func(x):
            v, g = fa(x)
            f0, f1 = rule(v, node)
            return f0, None if g is None else f1 * g

        return func
    fl = _compile_dual(node.left, n)
    fr = _compile_dual(node.right, n)
    op = node.op

    def binop(x):
        a, ga = fl(x)
        b, gb = fr(x)
        if op == "+" or op == "-":
            v = a + b if op == "+" else a - b
            if gb is None:
                return v, ga
            gb = gb if op == "+" else -gb
            return v, gb if ga is None else ga + gb
        if op == "*":
            if ga is None:
                return a * b, None if gb is None else a * gb
            if gb is None:
                return a * b, b * ga
            return a * b, a * gb + b * ga
        if b == 0.0:
            raise DomainError("division by zero", node)
        if gb is None:
            return a / b, None if ga is None else ga / b
        g = -(a / (b * b)) * gb
        return a / b, g if ga is None else ga / b + g

    return binop


def _ln_rule(v, node):
    if v <= 0.0:
        raise DomainError("ln of non-positive argument", node)
    return math.log(v), 1.0 / v


def _sqrt_rule(v, node):
    if v <= 0.0:
        raise DomainError(
            "sqrt of negative argument" if v < 0 else "sqrt derivative undefined at zero", node
        )
    r = math.sqrt(v)
    return r, 0.5 / r


def _exp_rule(v, node):
    try:
        ev = math.exp(v)
    except OverflowError:
        raise DomainError("exp overflow", node) from None
    return ev, ev


_FIRST_ORDER = {
    "sin": lambda v, node: (math.sin(v), math.cos(v)),
    "cos": lambda v, node: (math.cos(v), -math.sin(v)),
    "exp": _exp_rule,
    "ln": _ln_rule,
    "sqrt": _sqrt_rule,
}


def value_and_gradient(e: Expression, x) -> tuple[float, np.ndarray]:
    v, g = e._dual(_check_point(e, x))
    return float(v), np.zeros(e.arity) if g is None else np.array(g)


def gradient(e: Expression, x) -> np.ndarray:
    return value_and_gradient(e, x)[1]


def hessian(e: Expression, x) -> np.ndarray:
    """Exact Hessian; symmetric entry-for-entry."""
    return jet(e, x).h


# --------------------------------------------------------------------------
# finite-difference oracle

_EPS = np.finfo(float).eps


def _steps(x: np.ndarray, power: float, h) -> np.ndarray:
    if h is None:
        return _EPS**power * (1.0 + np.abs(x))
    return np.full(x.shape, float(h))


def fd_gradient(e: Expression, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient, step eps^(1/3)*(1+|x_i|) unless ``h`` given."""
    x = _check_point(e, x)
    steps = _steps(x, 1.0 / 3.0, h)
    g = np.empty(x.size)
    for i, hi in enumerate(steps):
        xp, xm = x.copy(), x.copy()
        xp[i] += hi
        xm[i] -= hi
        g[i] = (evaluate(e, xp) - evaluate(e, xm)) / (xp[i] - xm[i])
    return g


def fd_hessian(e: Expression, x, h: float | None = None) -> np.ndarray:
    """Four-point central second differences, step eps^(1/4)*(1+|x_i|)."""
    x = _check_point(e, x)
    steps = _steps(x, 0.25, h)
    n = x.size
    H = np.empty((n, n))

    def f(di: int, si: float, dj: int, sj: float) -> float:
        y = x.copy()
        y[di] += si
        y[dj] += sj
        return evaluate(e, y)

    for i in range(n):
        for j in range(i, n):
            hi, hj = steps[i], steps[j]
            val = (f(i, hi, j, hj) - f(i, hi, j, -hj) - f(i, -hi, j, hj) + f(i, -hi, j, -hj)) / (
                4.0 * hi * hj
            )
            H[i, j] = H[j, i] = val
    return H
