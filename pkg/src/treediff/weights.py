"""Radial weights: positive functions of the vertex length."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from . import expr as dsl
from .errors import EvaluationError, ParseError, WeightDomainError

# levels probed by the boundedness heuristic for expression weights
BOUNDED_PROBE_DEPTH = 64


class Weight:
    """A weight μ with μ(v) depending only on |v|."""

    def level_value(self, n: int) -> float:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.text()

    def at(self, n: int) -> float:
        """μ at level ``n``, checked to be positive and finite."""
        try:
            value = self.level_value(n)
        except EvaluationError as exc:
            raise WeightDomainError(f"weight {self.text()} cannot be evaluated at level {n}: {exc}") from exc
        if not (value > 0 and math.isfinite(value)):
            raise WeightDomainError(f"weight {self.text()} is not positive at level {n}: {value!r}")
        return value

    def ratio(self, n: int) -> float:
        """μ(v)/μ(b(v)) for |v| = n ≥ 1."""
        return self.at(n) / self.at(n - 1)

    def ratio_settles_at(self) -> int | None:
        """Depth D such that the ratio supremum over levels 1..D is the supremum over all levels.

        None when this cannot be certified.
        """
        raise NotImplementedError

    def bounded(self) -> tuple[bool, bool]:
        """(is μ bounded, is that answer certified)."""
        raise NotImplementedError


@dataclass(frozen=True)
class TableWeight(Weight):
    """Level table; the last entry repeats forever."""

    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(x) for x in self.values)
        if not values:
            raise ValueError("weight table must be non-empty")
        object.__setattr__(self, "values", values)

    def level_value(self, n: int) -> float:
        return self.values[min(n, len(self.values) - 1)]

    def text(self) -> str:
        return "table:" + ",".join(_num(x) for x in self.values)

    def ratio_settles_at(self) -> int:
        # ratio is exactly 1 from level len(values) on
        return max(len(self.values), 1)

    def bounded(self) -> tuple[bool, bool]:
        return True, True


@dataclass(frozen=True)
class ExprWeight(Weight):
    """Weight given by a DSL expression in the level variable ``n``."""

    source: str
    env: tuple[tuple[str, float], ...] = ()
    tree: dsl.Expr = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tree", dsl.parse(self.source))
        object.__setattr__(self, "env", tuple(sorted((k, float(v)) for k, v in dict(self.env).items())))
        missing = dsl.params(self.tree) - {k for k, _ in self.env}
        if missing:
            raise EvaluationError(f"weight {self.source!r} has unbound parameters {sorted(missing)}")

    def level_value(self, n: int) -> float:
        return dsl.eval_radial(self.tree, n, dict(self.env))

    def text(self) -> str:
        return "expr:" + self.source

    @cached_property
    def _parity_ratios(self):
        """Symbolic μ(n)/μ(n-1) for n ≥ 2, one entry per parity class of n, or None."""
        import sympy

        k = sympy.Symbol("k", integer=True, nonnegative=True)
        env = dict(self.env)
        ratios = []
        for parity in (0, 1):
            try:
                top = _to_sympy(self.tree, 2 * k + 2 + parity, parity, env)
                bottom = _to_sympy(self.tree, 2 * k + 1 + parity, 1 - parity, env)
                r = sympy.simplify(sympy.powsimp(top / bottom, force=True))
            except (TypeError, ValueError, ZeroDivisionError):
                return None
            ratios.append(r)
        return ratios

    def ratio_settles_at(self) -> int | None:
        ratios = self._parity_ratios
        if ratios is None or any(r.free_symbols for r in ratios):
            return None
        # levels 1..3 hold the root-adjacent ratio and both parity classes
        return 3

    def bounded(self) -> tuple[bool, bool]:
        ratios = self._parity_ratios
        if ratios is not None and not any(r.free_symbols for r in ratios):
            # product of the two parity ratios is the two-step growth factor
            growth = float(ratios[0] * ratios[1])
            return growth <= 1.0, True
        values = [self.at(n) for n in range(BOUNDED_PROBE_DEPTH + 1)]
        head = max(values[: 3 * len(values) // 4])
        tail = max(values[3 * len(values) // 4 :])
        return not (tail > head), False


def _num(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(x)


def _to_sympy(e: dsl.Expr, n, parity: int, env: Mapping[str, float]):
    import sympy

    if isinstance(e, dsl.Number):
        return sympy.Rational(e.text)
    if isinstance(e, dsl.Var):
        return n
    if isinstance(e, dsl.Param):
        return sympy.Rational(env[e.name])
    if isinstance(e, dsl.Neg):
        return -_to_sympy(e.operand, n, parity, env)
    if isinstance(e, dsl.BinOp):
        a = _to_sympy(e.left, n, parity, env)
        b = _to_sympy(e.right, n, parity, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b if e.op == "/" else a**b
    if isinstance(e, dsl.Call):
        first, second = e.args
        if e.name == "ifodd":
            return _to_sympy(first if parity == 1 else second, n, parity, env)
        if e.name == "ifzero":
            # only used for n >= 1
            return _to_sympy(second, n, parity, env)
        a = _to_sympy(first, n, parity, env)
        b = _to_sympy(second, n, parity, env)
        if e.name == "pow":
            return a**b
        return sympy.Min(a, b) if e.name == "min" else sympy.Max(a, b)
    raise TypeError(f"not an expression node: {e!r}")


def parse_weight(text: str, params: Mapping[str, float] | None = None) -> Weight:
    """Parse ``expr:<dsl>`` or ``table:1,2,1``."""
    kind, sep, rest = text.strip().partition(":")
    if not sep:
        raise ParseError(f"weight {text!r} lacks a ':'", len(text))
    if kind == "expr":
        env = dict(params or {})
        tree = dsl.parse(rest)
        used = {k: v for k, v in env.items() if k in dsl.params(tree)}
        return ExprWeight(rest, tuple(used.items()))
    if kind == "table":
        try:
            return TableWeight(tuple(float(tok) for tok in rest.split(",")))
        except ValueError:
            raise ParseError(f"weight table {rest!r} is not a list of numbers", len(kind) + 1) from None
    raise ParseError(f"unknown weight kind {kind!r}", 0)


def unit_weight() -> Weight:
    return TableWeight((1.0,))


def geometric_weight(M: float) -> Weight:
    """μ(v) = (M-1)^|v|, the weight on which D has norm exactly M."""
    return ExprWeight("pow(M-1,n)", (("M", float(M)),))


def odd_even_weight() -> Weight:
    """μ(v) = |v| on odd levels and 1 on even levels; D is unbounded for it."""
    return ExprWeight("ifodd(n,1)")
