"""Closed-form time functions: parsing, evaluation and symbolic differentiation.

Expressions are immutable trees over a single variable ``t``.  The grammar is::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?            # right associative
    atom    := NUMBER | 't' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := 'sin' | 'cos' | 'exp' | 'sqrt'

The exponent of ``^`` must fold to a rational constant.  Evaluation accepts a
scalar or a numpy array of times and raises :class:`ExprDomainError` instead of
producing NaN or inf.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np

Number = Union[int, float]
TimeLike = Union[float, np.ndarray]

__all__ = [
    "CoeffExpr",
    "Const",
    "T",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Func",
    "ExprSyntaxError",
    "ExprDomainError",
    "Constancy",
    "as_expr",
    "parse",
    "render",
    "evaluate",
    "differentiate",
    "is_constant",
    "constancy_of_values",
]


class ExprSyntaxError(ValueError):
    """Malformed expression text.  ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain (division by zero, sqrt of a negative, ...)."""

    def __init__(self, message: str, subexpr: "CoeffExpr"):
        super().__init__(f"{message} in '{render(subexpr)}'")
        self.subexpr = subexpr


# precedence levels used by the renderer
_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


class CoeffExpr:
    """Base class of expression nodes.

    Arithmetic operators build new trees (with constant folding), so systems
    can be written as ``k2 * a.a0 + k1 * f + k0``.  Calling an expression
    evaluates it.
    """

    __slots__ = ()

    def __call__(self, t: TimeLike) -> TimeLike:
        return evaluate(self, t)

    def __str__(self) -> str:
        return render(self)

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, Fraction(exponent))

    def derivative(self) -> "CoeffExpr":
        return differentiate(self)

    @property
    def is_const(self) -> bool:
        return isinstance(self, Const)


@dataclass(frozen=True)
class Const(CoeffExpr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class _Time(CoeffExpr):
    pass


T = _Time()


@dataclass(frozen=True)
class Neg(CoeffExpr):
    arg: CoeffExpr


@dataclass(frozen=True)
class Add(CoeffExpr):
    left: CoeffExpr
    right: CoeffExpr


@dataclass(frozen=True)
class Sub(CoeffExpr):
    left: CoeffExpr
    right: CoeffExpr


@dataclass(frozen=True)
class Mul(CoeffExpr):
    left: CoeffExpr
    right: CoeffExpr


@dataclass(frozen=True)
class Div(CoeffExpr):
    left: CoeffExpr
    right: CoeffExpr


@dataclass(frozen=True)
class Pow(CoeffExpr):
    base: CoeffExpr
    exponent: Fraction


@dataclass(frozen=True)
class Func(CoeffExpr):
    name: str
    arg: CoeffExpr


FUNCTIONS = ("sin", "cos", "exp", "sqrt")

ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> CoeffExpr:
    """Coerce numbers and expression strings to :class:`CoeffExpr`."""
    if isinstance(value, CoeffExpr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, Fraction, np.floating, np.integer)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite constant {value!r}")
        return Const(v)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


# ---------------------------------------------------------------------------
# smart constructors (constant folding only, no algebraic simplification)


def _fold(node: CoeffExpr) -> CoeffExpr:
    """Replace a tree with a constant when it has no ``t`` and evaluates cleanly."""
    try:
        value = _eval_scalar_const(node)
    except ExprDomainError:
        return node
    return Const(value)


def _eval_scalar_const(node: CoeffExpr) -> float:
    value = float(_eval(node, np.float64(0.0)))
    if not math.isfinite(value):
        raise ExprDomainError("non-finite constant", node)
    return value


def neg(a: CoeffExpr) -> CoeffExpr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(Add(a, b))
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Add(a, b)


def sub(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(Sub(a, b))
    if b == ZERO:
        return a
    if a == ZERO:
        return neg(b)
    return Sub(a, b)


def mul(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(Mul(a, b))
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Mul(a, b)


def div(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(Div(a, b))
    if b == ONE:
        return a
    return Div(a, b)


def power(base: CoeffExpr, exponent: Fraction) -> CoeffExpr:
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        return _fold(Pow(base, exponent))
    return Pow(base, exponent)


def func(name: str, arg: CoeffExpr) -> CoeffExpr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if isinstance(arg, Const):
        return _fold(Func(name, arg))
    return Func(name, arg)


def sqrt(arg) -> CoeffExpr:
    return func("sqrt", as_expr(arg))


def sin(arg) -> CoeffExpr:
    return func("sin", as_expr(arg))


def cos(arg) -> CoeffExpr:
    return func("cos", as_expr(arg))


def exp(arg) -> CoeffExpr:
    return func("exp", as_expr(arg))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ExprSyntaxError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0
        self.exact = False

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}", tok)

    def parse(self) -> CoeffExpr:
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    # In exact mode (exponents) the same grammar folds to Fraction values.
    def _binary(self, op, a, b):
        if self.exact:
            if op == "/" and b == 0:
                raise self.error("division by zero in exponent")
            return {"+": a.__add__, "-": a.__sub__, "*": a.__mul__, "/": a.__truediv__}[op](b)
        return {"+": add, "-": sub, "*": mul, "/": div}[op](a, b)

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = self._binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = self._binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            operand = self.unary()
            return -operand if self.exact else neg(operand)
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            tok = self.take()
            outer, self.exact = self.exact, True
            try:
                exponent = self.unary()
            finally:
                self.exact = outer
            if self.exact:
                if exponent.denominator != 1:
                    raise self.error("exponent must be a rational constant", tok)
                return base ** exponent.numerator
            return power(base, exponent)
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Fraction(text) if self.exact else Const(float(text))
        if kind == "name":
            if self.exact and text in ("t", "pi", *FUNCTIONS):
                raise self.error("exponent must be a rational constant", tok)
            if text == "t":
                return T
            if text == "pi":
                return Const(math.pi)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(text, arg)
            raise self.error(f"unknown identifier {text!r}", tok)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {text!r}", tok)


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def parse(text: str) -> CoeffExpr:
    """Parse expression text into a tree.  Whitespace is insignificant."""
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# rendering


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _fmt_fraction(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator) if q >= 0 else f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def _render(node: CoeffExpr) -> tuple[str, int]:
    if isinstance(node, Const):
        if node.value < 0 or (node.value == 0 and math.copysign(1.0, node.value) < 0):
            return f"(-{_fmt_number(-node.value)})", _P_ATOM
        return _fmt_number(node.value), _P_ATOM
    if node is T or isinstance(node, _Time):
        return "t", _P_ATOM
    if isinstance(node, Func):
        return f"{node.name}({_render(node.arg)[0]})", _P_ATOM
    if isinstance(node, Neg):
        s, p = _render(node.arg)
        # unary minus binds looser than ^ but tighter than * and /
        return "-" + (s if p >= _P_NEG else f"({s})"), _P_NEG
    if isinstance(node, Pow):
        s, p = _render(node.base)
        return (s if p == _P_ATOM else f"({s})") + "^" + _fmt_fraction(node.exponent), _P_POW
    if isinstance(node, (Add, Sub)):
        ls, lp = _render(node.left)
        rs, rp = _render(node.right)
        op = "+" if isinstance(node, Add) else "-"
        # '-' is not associative on the right
        if rp < _P_MUL:
            rs = f"({rs})"
        if lp < _P_ADD:
            ls = f"({ls})"
        return f"{ls} {op} {rs}", _P_ADD
    if isinstance(node, (Mul, Div)):
        ls, lp = _render(node.left)
        rs, rp = _render(node.right)
        op = "*" if isinstance(node, Mul) else "/"
        if lp < _P_MUL:
            ls = f"({ls})"
        if rp <= _P_MUL:
            rs = f"({rs})"
        return f"{ls} {op} {rs}", _P_MUL
    raise TypeError(f"unknown node {node!r}")


def render(e: CoeffExpr) -> str:
    """Render an expression as text that :func:`parse` reads back."""
    return _render(e)[0]


# ---------------------------------------------------------------------------
# evaluation


def _eval(node: CoeffExpr, t):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, _Time):
        return t
    if isinstance(node, Neg):
        return -_eval(node.arg, t)
    if isinstance(node, Add):
        return _eval(node.left, t) + _eval(node.right, t)
    if isinstance(node, Sub):
        return _eval(node.left, t) - _eval(node.right, t)
    if isinstance(node, Mul):
        return _eval(node.left, t) * _eval(node.right, t)
    if isinstance(node, Div):
        den = _eval(node.right, t)
        if np.any(np.asarray(den) == 0.0):
            raise ExprDomainError("division by zero", node)
        return _eval(node.left, t) / den
    if isinstance(node, Pow):
        base = np.asarray(_eval(node.base, t), dtype=float)
        q = node.exponent
        if q.denominator != 1 and np.any(base < 0):
            raise ExprDomainError("non-integer power of a negative number", node)
        if q < 0 and np.any(base == 0):
            raise ExprDomainError("division by zero", node)
        if q.denominator == 1:
            return _int_power(base, q.numerator)
        if q.denominator == 2:
            return _int_power(np.sqrt(base), q.numerator)
        return np.power(base, float(q))
    if isinstance(node, Func):
        arg = _eval(node.arg, t)
        if node.name == "sin":
            return np.sin(arg)
        if node.name == "cos":
            return np.cos(arg)
        if node.name == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(arg)
            if not np.all(np.isfinite(out)):
                raise ExprDomainError("overflow", node)
            return out
        if node.name == "sqrt":
            if np.any(np.asarray(arg) < 0):
                raise ExprDomainError("square root of a negative number", node)
            return np.sqrt(arg)
    raise TypeError(f"unknown node {node!r}")


def _int_power(base: np.ndarray, n: int) -> np.ndarray:
    if n >= 0:
        return base**n
    return 1.0 / base ** (-n)


def evaluate(e: CoeffExpr, t: TimeLike) -> TimeLike:
    """Value of ``e`` at ``t`` (scalar or array).

    Raises :class:`ExprDomainError` naming the offending subexpression when a
    value would leave the reals or overflow.
    """
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = _eval(e, tt)
    out = np.broadcast_to(np.asarray(out, dtype=float), tt.shape)
    if not np.all(np.isfinite(out)):
        raise ExprDomainError("non-finite value", e)
    if scalar:
        return float(out)
    return np.array(out)


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: CoeffExpr) -> CoeffExpr:
    """Symbolic d/dt."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, _Time):
        return ONE
    if isinstance(e, Neg):
        return neg(differentiate(e.arg))
    if isinstance(e, Add):
        return add(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Sub):
        return sub(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Mul):
        u, v = e.left, e.right
        return add(mul(differentiate(u), v), mul(u, differentiate(v)))
    if isinstance(e, Div):
        u, v = e.left, e.right
        du, dv = differentiate(u), differentiate(v)
        if dv == ZERO:
            return div(du, v)
        return div(sub(mul(du, v), mul(u, dv)), power(v, Fraction(2)))
    if isinstance(e, Pow):
        q = e.exponent
        return mul(mul(Const(float(q)), power(e.base, q - 1)), differentiate(e.base))
    if isinstance(e, Func):
        du = differentiate(e.arg)
        if e.name == "sin":
            outer = func("cos", e.arg)
        elif e.name == "cos":
            outer = neg(func("sin", e.arg))
        elif e.name == "exp":
            outer = e
        else:
            outer = div(Const(0.5), e)
        return mul(outer, du)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# constancy


class Constancy(NamedTuple):
    flag: bool
    value: float
    max_residual: float


def constancy_of_values(values, tol: float) -> Constancy:
    """Constancy verdict for already-sampled values; the first sample is the reference."""
    values = np.asarray(values, dtype=float)
    ref = float(values[0])
    residual = float(np.max(np.abs(values - ref)))
    return Constancy(residual <= tol * (1.0 + abs(ref)), ref, residual)


def is_constant(e: CoeffExpr, grid, tol: float = 1e-9) -> Constancy:
    """Sample ``e`` on ``grid`` and decide whether it is constant within ``tol``.

    Constant iff ``max|e(t_i) - e(t_0)| <= tol * (1 + |e(t_0)|)``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("constancy grid needs at least two points")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    return constancy_of_values(evaluate(e, grid), tol)
