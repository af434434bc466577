"""Arithmetic expressions over tangent-bundle coordinates ``x1..xn, y1..yn``.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' exponent)*
    exponent:= ('-' | '+')? atom              (must be a constant integer)
    atom    := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Precedence is ``^`` > unary minus > ``* /`` > ``+ -``, left-associative within
a level, so ``-y1^2`` is ``-(y1^2)`` and ``2^3^2`` is ``(2^3)^2``.  Numeric
literals are kept as exact :class:`fractions.Fraction` values.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .jets import DomainError, Jet, JetSpace, PointTM, compose_fn, DivisionByZeroJet

__all__ = [
    "Expr",
    "Num",
    "Var",
    "BinOp",
    "Neg",
    "Call",
    "ExprSyntaxError",
    "UnknownVariable",
    "NonIntegerExponent",
    "DomainError",
    "SprayModel",
    "HomogeneityReport",
    "parse",
    "to_source",
    "evaluate",
    "eval_jet",
    "check_homogeneity",
    "FUNCTIONS",
    "MAX_ORDER",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
MAX_ORDER = 6


class ExprSyntaxError(SyntaxError):
    """Malformed expression; carries 1-based line/column and expected tokens."""

    def __init__(self, message, source, pos, expected=()):
        line = source.count("\n", 0, pos) + 1
        col = pos - (source.rfind("\n", 0, pos) + 1) + 1
        self.line, self.column, self.pos = line, col, pos
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at line {line}, column {col}{detail}")


class UnknownVariable(ExprSyntaxError):
    pass


class NonIntegerExponent(ExprSyntaxError):
    pass


# AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "y"
    index: int  # 1-based

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, BinOp, Neg, Call]


# tokenizer / parser -----------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_VAR = re.compile(r"([xy])([1-9][0-9]*)$")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, pos)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


@dataclass
class _Parser:
    source: str
    n: int
    toks: list[_Tok] = field(default_factory=list)
    i: int = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, expected=(), tok=None, cls=ExprSyntaxError):
        tok = tok or self.peek()
        raise cls(msg, self.source, tok.pos, expected)

    def expect(self, text):
        t = self.peek()
        if t.text != text:
            self.fail(f"unexpected {t.text or 'end of input'!r}", (repr(text),))
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(
                f"unexpected {self.peek().text!r}",
                ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"),
            )
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        if self.peek().text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        while self.peek().text == "^":
            self.advance()
            tok = self.peek()
            sign = 1
            while self.peek().text in ("-", "+"):
                if self.advance().text == "-":
                    sign = -sign
            exp = self.atom()
            value = _constant_value(exp)
            if value is None or value.denominator != 1:
                self.fail("exponent must be a constant integer", tok=tok, cls=NonIntegerExponent)
            base = BinOp("^", base, Num(Fraction(sign * value)))
        return base

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.advance()
            return Num(Fraction(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            m = _VAR.match(t.text)
            if m is None:
                self.fail(
                    f"unknown identifier {t.text!r}",
                    ("variable", "function", "number"),
                    tok=t,
                    cls=UnknownVariable,
                )
            idx = int(m.group(2))
            if not 1 <= idx <= self.n:
                self.fail(
                    f"variable {t.text!r} out of range 1..{self.n}",
                    tok=t,
                    cls=UnknownVariable,
                )
            return Var(m.group(1), idx)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail(
            f"unexpected {t.text or 'end of input'!r}",
            ("number", "variable", "function", "'('", "'-'"),
        )


def _constant_value(e: Expr) -> Fraction | None:
    """Exact value of a variable-free, function-free subtree (else None)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        v = _constant_value(e.operand)
        return None if v is None else -v
    if isinstance(e, BinOp):
        a, b = _constant_value(e.left), _constant_value(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return None if b == 0 else a / b
        if e.op == "^":
            if a == 0 and b < 0:
                return None
            return a ** int(b)
    return None


def parse(source: str, n: int) -> Expr:
    """Parse ``source`` into an expression tree over ``x1..xn, y1..yn``."""
    if n < 1:
        raise ValueError("dimension must be positive")
    p = _Parser(source, n)
    p.toks = _tokenize(source)
    return p.parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    d, twos, fives = v.denominator, 0, 0
    while d % 2 == 0:
        d, twos = d // 2, twos + 1
    while d % 5 == 0:
        d, fives = d // 5, fives + 1
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    # terminating decimal: reparses to the identical Fraction literal
    places = max(twos, fives)
    scaled = abs(v.numerator) * 10**places // v.denominator
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if v < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def to_source(e: Expr) -> str:
    """Print an expression so that ``parse(to_source(e))`` rebuilds ``e``."""

    def go(e: Expr, parent: int, right: bool) -> str:
        if isinstance(e, Num):
            s = _fmt_num(e.value)
            # negative or non-decimal literals reparse as composite nodes
            if e.value < 0 or "/" in s:
                return f"({s})"
            return s
        if isinstance(e, Var):
            return e.name
        if isinstance(e, Call):
            return f"{e.func}({go(e.arg, 0, False)})"
        if isinstance(e, Neg):
            s = "-" + go(e.operand, _PREC["neg"], False)
            return f"({s})" if parent > _PREC["neg"] or parent == _PREC["neg"] and right else s
        p = _PREC[e.op]
        if e.op == "^":
            k = int(e.right.value)
            s = f"{go(e.left, p, False)}^{k}"
        else:
            s = f"{go(e.left, p, False)}{e.op}{go(e.right, p, True)}"
        if p < parent or (p == parent and right):
            return f"({s})"
        return s

    return go(e, 0, False)


# evaluation ----------------------------------------------------------------------


def _walk(e: Expr, leaf, num, unary, binop, call):
    if isinstance(e, Num):
        return num(e.value)
    if isinstance(e, Var):
        return leaf(e)
    if isinstance(e, Neg):
        return unary(_walk(e.operand, leaf, num, unary, binop, call))
    if isinstance(e, Call):
        return call(e, _walk(e.arg, leaf, num, unary, binop, call))
    left = _walk(e.left, leaf, num, unary, binop, call)
    if e.op == "^":
        return binop(e, left, int(e.right.value))
    return binop(e, left, _walk(e.right, leaf, num, unary, binop, call))


def evaluate(e: Expr, x: Sequence[float], y: Sequence[float]) -> float:
    """Plain floating point evaluation."""

    def binop(node, a, b):
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0:
                raise DomainError(f"division by zero in {to_source(node)}")
            return a / b
        if a == 0 and b < 0:
            raise DomainError(f"negative power of zero in {to_source(node)}")
        return a**b

    def call(node, a):
        if node.func in ("log", "sqrt") and a <= 0:
            raise DomainError(f"{node.func} of non-positive value in {to_source(node)}")
        return getattr(math, node.func)(a)

    return float(
        _walk(
            e,
            leaf=lambda v: float((x if v.kind == "x" else y)[v.index - 1]),
            num=float,
            unary=lambda a: -a,
            binop=binop,
            call=call,
        )
    )


def eval_jet(e: Expr, u: PointTM, order: int) -> Jet:
    """Taylor expansion of ``e`` at ``u`` over the 2n coordinates (x then y)."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in [0, {MAX_ORDER}]")
    n = u.n
    space = JetSpace.get(2 * n, order)
    coords = u.coords

    def leaf(v: Var) -> Jet:
        k = v.index - 1 + (n if v.kind == "y" else 0)
        c = np.zeros(space.size)
        c[0] = coords[k]
        if order >= 1:
            c[1 + k] = 1.0  # first-degree block follows the constant term
        return Jet(space, c)

    def binop(node, a, b):
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                return a / b
            return a**b
        except DivisionByZeroJet as exc:
            raise DomainError(f"division by zero in {to_source(node)}") from exc

    def call(node, a):
        try:
            return compose_fn(node.func, a)
        except DomainError as exc:
            raise DomainError(f"{exc} in {to_source(node)}") from exc

    return _walk(
        e,
        leaf=leaf,
        num=lambda v: Jet.const(space, float(v)),
        unary=lambda a: -a,
        binop=binop,
        call=call,
    )


def variables(e: Expr) -> set[str]:
    out: set[str] = set()
    _walk(
        e,
        leaf=lambda v: out.add(v.name),
        num=lambda v: None,
        unary=lambda a: None,
        binop=lambda n, a, b: None,
        call=lambda n, a: None,
    )
    return out


# homogeneity ----------------------------------------------------------------------


@dataclass
class HomogeneityReport:
    degree: int
    checked: int
    failures: list[tuple[PointTM, float]]

    @property
    def passed(self) -> bool:
        return not self.failures


def check_homogeneity(
    e: Expr, degree: int, samples: Sequence[PointTM], tol: float = 1e-9
) -> HomogeneityReport:
    """Euler test ``sum_j y^j de/dy^j == degree * e`` at every sample."""
    if not samples:
        raise ValueError("need at least one sample point")
    failures = []
    for u in samples:
        j = eval_jet(e, u, 1)
        n = u.n
        euler = sum(u.y[k] * j.coeffs[1 + n + k] for k in range(n))
        resid = abs(euler - degree * j.value)
        if resid > tol * (1.0 + abs(j.value)):
            failures.append((u, float(resid)))
    return HomogeneityReport(degree, len(samples), failures)


@dataclass
class SprayModel:
    """A homogeneous SODE ``x''^i = f^i(x, x')`` given by its coefficient expressions."""

    n: int
    coeffs: tuple[Expr, ...]
    label: str = ""

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        self.coeffs = tuple(self.coeffs)
        if len(self.coeffs) != self.n:
            raise ValueError(f"expected {self.n} coefficients, got {len(self.coeffs)}")

    @classmethod
    def from_strings(cls, sources: Sequence[str], label: str = "") -> "SprayModel":
        n = len(sources)
        return cls(n, tuple(parse(s, n) for s in sources), label)

    @property
    def sources(self) -> list[str]:
        return [to_source(e) for e in self.coeffs]

    def jets(self, u: PointTM, order: int) -> Jet:
        """Stacked jets of ``f^1..f^n`` at ``u``."""
        if u.n != self.n:
            raise ValueError("point dimension does not match spray")
        return Jet.stack([eval_jet(e, u, order) for e in self.coeffs])

    def check_homogeneity(self, samples, tol=1e-9) -> list[HomogeneityReport]:
        return [check_homogeneity(e, 2, samples, tol) for e in self.coeffs]
