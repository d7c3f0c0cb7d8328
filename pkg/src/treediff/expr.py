"""A small expression language for radial weights and radial functions.

Expressions are evaluated at a level ``n`` (the vertex length) with a table of
named numeric parameters.  Grammar::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := NUMBER | "n" | IDENT | IDENT "(" expr "," expr ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-2^2``
is ``-4`` and ``2^3^2`` is ``512``.  The builtins ``pow``, ``min``, ``max``,
``ifodd`` and ``ifzero`` all take two arguments; ``ifodd(a, b)`` is ``a`` on
odd levels and ``b`` otherwise, ``ifzero(a, b)`` is ``a`` at level 0 and ``b``
otherwise.  Only the selected branch is evaluated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

from .errors import EvaluationError, ParseError

BUILTINS = ("pow", "ifodd", "ifzero", "min", "max")


@dataclass(frozen=True)
class Number:
    value: float
    text: str


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Number, Var, Param, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?|\.\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", offset)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.take()
        if kind == "number":
            return Number(float(text), text)
        if kind == "ident":
            if self.peek()[:2] == ("op", "("):
                if text not in BUILTINS:
                    raise ParseError(f"unknown function {text!r}", offset)
                self.take()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                close = self.peek()
                if close[:2] != ("op", ")"):
                    found = "end of input" if close[0] == "end" else repr(close[1])
                    raise ParseError(f"expected ')' closing {text}(, found {found}", close[2])
                self.take()
                if len(args) != 2:
                    raise ParseError(f"{text} takes 2 arguments, got {len(args)}", offset)
                return Call(text, tuple(args))
            return Var() if text == "n" else Param(text)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", offset)


def parse(text: str) -> Expr:
    """Parse DSL text into an expression tree."""
    if not text.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(text)
    node = parser.expr()
    kind, tok, offset = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {tok!r}", offset)
    return node


def format(e: Expr) -> str:
    """Canonical fully parenthesized text of ``e``."""
    if isinstance(e, Number):
        return e.text
    if isinstance(e, Var):
        return "n"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Neg):
        return f"(-{format(e.operand)})"
    if isinstance(e, BinOp):
        return f"({format(e.left)}{e.op}{format(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({','.join(format(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def params(e: Expr) -> set[str]:
    """Names of all parameters referenced by ``e``."""
    if isinstance(e, Param):
        return {e.name}
    if isinstance(e, Neg):
        return params(e.operand)
    if isinstance(e, BinOp):
        return params(e.left) | params(e.right)
    if isinstance(e, Call):
        return set().union(*(params(a) for a in e.args))
    return set()


def _pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except ValueError:
        raise EvaluationError(f"pow({a!r}, {b!r}) is not a real number") from None
    except OverflowError:
        raise EvaluationError(f"pow({a!r}, {b!r}) overflows") from None


def eval_radial(e: Expr, n: int, env: Mapping[str, float] | None = None) -> float:
    """Evaluate ``e`` at level ``n``."""
    env = env or {}
    value = _eval(e, n, env)
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite result {value!r} at n={n}")
    return value


def _eval(e: Expr, n: int, env: Mapping[str, float]) -> float:
    if isinstance(e, Number):
        return e.value
    if isinstance(e, Var):
        return float(n)
    if isinstance(e, Param):
        try:
            return float(env[e.name])
        except KeyError:
            raise EvaluationError(f"unbound parameter {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval(e.operand, n, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, n, env)
        b = _eval(e.right, n, env)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        elif e.op == "/":
            if b == 0:
                raise EvaluationError(f"division by zero at n={n}")
            r = a / b
        else:
            r = _pow(a, b)
        if not math.isfinite(r):
            raise EvaluationError(f"non-finite intermediate {r!r} at n={n}")
        return r
    if isinstance(e, Call):
        first, second = e.args
        if e.name == "ifodd":
            return _eval(first if n % 2 == 1 else second, n, env)
        if e.name == "ifzero":
            return _eval(first if n == 0 else second, n, env)
        a, b = _eval(first, n, env), _eval(second, n, env)
        if e.name == "pow":
            return _pow(a, b)
        return min(a, b) if e.name == "min" else max(a, b)
    raise TypeError(f"not an expression node: {e!r}")
