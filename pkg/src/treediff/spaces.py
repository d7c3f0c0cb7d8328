"""Truncated norms on the Lipschitz space, weighted sup-norm spaces and Hardy spaces.

Every norm here is a supremum over an infinite tree, so it is computed on the
closed ball of radius N around the root and returned as a ``NormReport``:
the running partial suprema by depth, the vertex (or level) attaining the
last one, and whether the representation of the function guarantees that the
partial value is already the exact norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

from . import functions as fm
from .errors import ParseError
from .functions import (
    AlternatingWitness,
    AlternatingWitnessDerivative,
    Radial,
    Sparse,
    TreeFunction,
)
from .tree import Homogeneous, TreeShape, Vertex, level, level_size
from .weights import TableWeight, Weight, parse_weight, unit_weight

Witness = Union[Vertex, int, None]


@dataclass
class NormReport:
    partials: list[tuple[int, float]] = field(default_factory=list)
    witness: Witness = None
    attained: bool = False

    @property
    def value(self) -> float:
        return self.partials[-1][1] if self.partials else 0.0

    @property
    def depth(self) -> int:
        return self.partials[-1][0] if self.partials else 0

    def to_json(self) -> dict:
        witness = list(self.witness) if isinstance(self.witness, tuple) else self.witness
        return {"partials": [[d, v] for d, v in self.partials], "witness": witness, "attained": self.attained}


def pairwise_sum(values: Sequence[float]) -> float:
    """Sum by recursive halving in the given order; the result depends only on that order."""
    n = len(values)
    if n <= 8:
        total = 0.0
        for x in values:
            total += x
        return total
    mid = n // 2
    return pairwise_sum(values[:mid]) + pairwise_sum(values[mid:])


def _level_maxima(
    g: TreeFunction, shape: TreeShape, lo: int, hi: int, level_weight: Callable[[int], float] | None = None
) -> list[tuple[int, float, Vertex]]:
    """Per level d in lo..hi, the max of w(d)|g(v)| over |v| = d with its least maximizer."""
    out = []
    by_level: dict[int, list[tuple[Vertex, complex]]] = {}
    if isinstance(g, Sparse):
        g.validate_for(shape)
        for v, z in g.entries.items():
            by_level.setdefault(len(v), []).append((v, z))
    for d in range(lo, hi + 1):
        w = 1.0 if level_weight is None else level_weight(d)
        first = (0,) * d
        if g.radial:
            out.append((d, w * abs(g.level_value(d)), first))
            continue
        if isinstance(g, Sparse):
            candidates: Iterable[tuple[Vertex, complex]] = by_level.get(d, [])
        else:
            candidates = ((v, g.evaluate(v)) for v in level(shape, d))
        best, arg = 0.0, first
        for v, z in candidates:
            m = w * abs(z)
            if m > best:
                best, arg = m, v
        out.append((d, best, arg))
    return out


def _report(maxima, offset: float = 0.0, attained: bool = False) -> NormReport:
    report = NormReport(attained=attained)
    running, witness = -1.0, None
    for d, m, v in maxima:
        if m > running:
            running, witness = m, v
        report.partials.append((d, offset + running))
    report.witness = witness
    return report


def _exact_sup_reached(g: TreeFunction, N: int) -> bool:
    if isinstance(g, Sparse):
        return N >= g.support_depth
    if isinstance(g, Radial):
        return N >= g.tail_level
    return False


def lipschitz_partial_norm(f: TreeFunction, shape: TreeShape, N: int) -> NormReport:
    """|f(o)| + max over 1 ≤ |v| ≤ N of |f'(v)|."""
    if N < 1:
        raise ValueError(f"Lipschitz truncation depth must be at least 1, got {N}")
    df = fm.derivative(f, shape)
    maxima = _level_maxima(df, shape, 1, N)
    return _report(maxima, offset=abs(f.evaluate(())), attained=_exact_sup_reached(df, N))


def _weighted_attained(f: TreeFunction, weight: Weight, N: int) -> bool:
    if isinstance(f, AlternatingWitness) and f.weight == weight:
        # μ(v)|g(v)| = 1 identically
        return True
    if isinstance(f, AlternatingWitnessDerivative) and f.weight == weight:
        # level values are 1 + μ(n)/μ(n-1) for n ≥ 1
        settles = weight.ratio_settles_at()
        return settles is not None and N >= settles
    if isinstance(f, Sparse):
        return N >= f.support_depth
    if isinstance(f, Radial):
        if f.tail == 0:
            return N >= f.tail_level
        if isinstance(weight, TableWeight):
            return N >= max(f.tail_level, len(weight.values) - 1)
    return False


def weighted_partial_norm(f: TreeFunction, weight: Weight, shape: TreeShape, N: int) -> NormReport:
    """max over |v| ≤ N of μ(v)|f(v)|."""
    if N < 0:
        raise ValueError(f"truncation depth must be non-negative, got {N}")
    maxima = _level_maxima(f, shape, 0, N, weight.at)
    return _report(maxima, attained=_weighted_attained(f, weight, N))


@dataclass(frozen=True)
class HardyParams:
    q: int
    p: float

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q!r}")
        p = float(self.p)
        if not (p >= 1 and math.isfinite(p)):
            raise ValueError(f"p must satisfy 1 <= p < inf, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def shape(self) -> Homogeneous:
        return Homogeneous(self.q)


def hardy_level_mean(f: TreeFunction, params: HardyParams, n: int, exhaustive: bool = False) -> float:
    """M_p(n, f); radial functions skip the enumeration unless ``exhaustive``."""
    if n < 0:
        raise ValueError(f"level must be non-negative, got {n}")
    if n == 0:
        return abs(f.evaluate(()))
    if f.radial and not exhaustive:
        return abs(f.level_value(n))
    shape = params.shape
    size = level_size(shape, n)
    p = params.p
    if isinstance(f, Sparse) and not exhaustive:
        f.validate_for(shape)
        terms = [abs(z) ** p for v, z in f.entries.items() if len(v) == n]
    else:
        terms = [abs(f.evaluate(v)) ** p for v in level(shape, n)]
    return (pairwise_sum(terms) / size) ** (1.0 / p)


def hardy_partial_norm(f: TreeFunction, params: HardyParams, N: int) -> NormReport:
    """max over n ≤ N of M_p(n, f); the witness is the smallest maximizing level."""
    if N < 0:
        raise ValueError(f"truncation depth must be non-negative, got {N}")
    report = NormReport(attained=_exact_sup_reached(f, N))
    running = -1.0
    for n in range(N + 1):
        m = hardy_level_mean(f, params, n)
        if m > running:
            running, report.witness = m, n
        report.partials.append((n, running))
    return report


# --- space descriptors ------------------------------------------------------


class Space:
    name = "space"

    def norm(self, f: TreeFunction, shape: TreeShape, N: int) -> NormReport:
        raise NotImplementedError

    def contains_constants(self) -> tuple[bool, bool]:
        """(constants belong to the space, answer certified)."""
        return True, True

    def check_shape(self, shape: TreeShape) -> None:
        pass

    def text(self) -> str:
        return self.name

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class Lipschitz(Space):
    name = "lipschitz"

    def norm(self, f, shape, N):
        return lipschitz_partial_norm(f, shape, N)


@dataclass(frozen=True)
class Weighted(Space):
    weight: Weight = field(default_factory=unit_weight)
    name = "weighted"

    def norm(self, f, shape, N):
        return weighted_partial_norm(f, self.weight, shape, N)

    def contains_constants(self):
        # constants lie in the space exactly when the weight is bounded
        return self.weight.bounded()

    def text(self):
        return f"weighted:{self.weight.text()}"


@dataclass(frozen=True)
class Hardy(Space):
    params: HardyParams = None
    name = "hardy"

    def norm(self, f, shape, N):
        self.check_shape(shape)
        return hardy_partial_norm(f, self.params, N)

    def check_shape(self, shape):
        if shape != self.params.shape:
            raise ValueError(f"Hardy space with q={self.params.q} lives on {self.params.shape}, not {shape}")

    def text(self):
        return f"hardy:q={self.params.q},p={_num(self.params.p)}"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def parse_space(text: str, params=None, weight: Weight | None = None) -> Space:
    """Parse ``lipschitz``, ``weighted:<weight>`` (or bare ``weighted`` with ``weight``), ``hardy:q=<q>,p=<p>``."""
    text = text.strip()
    if text == "lipschitz":
        return Lipschitz()
    if text == "weighted":
        return Weighted(weight or unit_weight())
    if text.startswith("weighted:"):
        return Weighted(parse_weight(text[len("weighted:") :], params))
    if text.startswith("hardy:"):
        fields = {}
        for item in text[len("hardy:") :].split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ParseError(f"hardy parameter {item!r} is not key=value", len("hardy:"))
            fields[key.strip()] = value.strip()
        try:
            return Hardy(HardyParams(int(fields["q"]), float(fields["p"])))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad hardy parameters in {text!r}: {exc}", len("hardy:")) from None
    raise ParseError(f"unknown space {text!r}", 0)


# --- point evaluation -------------------------------------------------------


@dataclass
class BoundCheck:
    holds: bool
    slack: float
    bound: float
    value: float
    certified: bool


def point_eval_bound(space: Space, f: TreeFunction, v: Vertex, shape: TreeShape, N: int) -> BoundCheck:
    """Check the point-evaluation estimate of ``space`` for ``f`` at ``v``.

    The norm is truncated at depth N ≥ |v|.  An uncertified (partial) norm is a
    lower bound of the true norm, so a passing check confirms the estimate but
    a failing one refutes nothing.
    """
    v = tuple(v)
    if N < len(v):
        raise ValueError(f"truncation depth {N} is below |v| = {len(v)}")
    report = space.norm(f, shape, max(N, 1) if isinstance(space, Lipschitz) else N)
    value = abs(f.evaluate(v))
    if isinstance(space, Lipschitz):
        root = abs(f.evaluate(()))
        bound = root + len(v) * (report.value - root)
    elif isinstance(space, Weighted):
        bound = report.value / space.weight.at(len(v))
    elif isinstance(space, Hardy):
        q, p = space.params.q, space.params.p
        bound = ((q + 1) * float(q) ** (len(v) - 1)) ** (1.0 / p) * report.value
    else:
        raise TypeError(f"unknown space {space!r}")
    slack = bound - value
    return BoundCheck(slack >= -1e-12, slack, bound, value, report.attained)
