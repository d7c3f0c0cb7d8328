"""The differentiation operator D, the backward composition C_b, and their analysis.

D = I - C_b on every space considered here.  This module computes the
ingredients that decide boundedness of C_b on each space (λ_b on the
Lipschitz space, the weight ratio supremum on L∞_μ, the α_n sequence on the
Hardy spaces), turns them into operator-norm bounds and spectrum bounding
disks, classifies eigenvalues of D by propagating the eigen-equation level by
level, and builds lower-triangular finite sections.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import functions as fm
from .errors import RangeError, UnboundedOperatorError
from .functions import TreeFunction
from .spaces import Hardy, Lipschitz, NormReport, Space, Weighted, _report
from .tree import (
    TreeShape,
    Vertex,
    backward_shift,
    ball,
    ball_size,
    children,
    distance,
    has_branching,
    level,
)
from .weights import Weight

DEFAULT_UNBOUNDED_CAP = 1e6
DEFAULT_MATRIX_CAP = 20000
DISK_TOLERANCE = 1e-12


# --- operator descriptors ---------------------------------------------------


@dataclass(frozen=True)
class Operator:
    """Identity, Differentiation, BackwardComposition, Composition or AffineCombo.

    ``terms`` is only used by AffineCombo and is kept flat: a list of
    (coefficient, non-combo operator) pairs.
    """

    kind: str
    phi: Callable[[Vertex], Vertex] | None = field(default=None, compare=False)
    label: str = ""
    terms: tuple[tuple[complex, "Operator"], ...] = ()

    def __str__(self) -> str:
        if self.kind == "AffineCombo":
            return " + ".join(f"{_coef(c)}{op}" for c, op in self.terms)
        return self.label or self.kind


def _coef(c: complex) -> str:
    c = complex(c)
    if c == 1:
        return ""
    if c.imag == 0:
        return f"{c.real:g}*"
    return f"({c})*"


I = Operator("Identity", label="I")
D = Operator("Differentiation", label="D")
CB = Operator("BackwardComposition", label="Cb")


def composition(phi: Callable[[Vertex], Vertex], label: str = "Cphi") -> Operator:
    return Operator("Composition", phi=phi, label=label)


def combo(*terms: tuple[complex, Operator]) -> Operator:
    """Flat affine combination Σ c_i A_i; nested combos are expanded."""
    flat: list[tuple[complex, Operator]] = []
    for c, op in terms:
        if op.kind == "AffineCombo":
            flat.extend((complex(c) * c2, op2) for c2, op2 in op.terms)
        else:
            flat.append((complex(c), op))
    return Operator("AffineCombo", terms=tuple(flat))


def parse_operator(text: str) -> Operator:
    names = {"I": I, "D": D, "Cb": CB, "I-Cb": combo((1, I), (-1, CB)), "I+Cb": combo((1, I), (1, CB))}
    try:
        return names[text.strip()]
    except KeyError:
        raise ValueError(f"unknown operator {text!r}; expected one of {sorted(names)}") from None


def apply(op: Operator, f: TreeFunction, shape: TreeShape | None = None) -> TreeFunction:
    if op.kind == "Identity":
        return f
    if op.kind == "Differentiation":
        return fm.derivative(f, shape)
    if op.kind == "BackwardComposition":
        return fm.compose_backward(f, shape)
    if op.kind == "Composition":
        return fm.compose(f, op.phi, op.label)
    result: TreeFunction = fm.zero()
    for c, sub in op.terms:
        result = fm.linear_combine(1, result, c, apply(sub, f, shape))
    return result


# --- boundedness ingredients ------------------------------------------------


def lipschitz_lambda_b(shape: TreeShape, N: int) -> float:
    """max over 1 ≤ |v| ≤ N of d(b(v), b(b(v)))."""
    if N < 1:
        raise ValueError(f"depth must be at least 1, got {N}")
    best = 0
    for n in range(1, N + 1):
        for v in level(shape, n):
            bv = backward_shift(v)
            best = max(best, distance(shape, bv, backward_shift(bv)))
    return float(best)


def weighted_ratio_sup(weight: Weight, shape: TreeShape, N: int, cap: float | None = None) -> NormReport:
    """Partial suprema of μ(v)/μ(b(v)) over 1 ≤ |v| ≤ N.

    The weight is radial, so one vertex per level decides.  With ``cap`` set,
    a partial supremum above the cap raises UnboundedOperatorError.
    """
    if N < 1:
        raise ValueError(f"depth must be at least 1, got {N}")
    maxima = []
    for n in range(1, N + 1):
        r = weight.ratio(n)
        maxima.append((n, r, n))
        if cap is not None and r > cap:
            raise UnboundedOperatorError(
                f"weight ratio {r:g} at level {n} exceeds cap {cap:g}; D is treated as unbounded", depth=n, value=r
            )
    settles = weight.ratio_settles_at()
    return _report(maxima, attained=settles is not None and N >= settles)


def combinatorial_N(q: int, m: int, n: int) -> int:
    """N_{m,n}: the largest number of level-n preimages under b of a level-m vertex."""
    if m == 0 and n == 0:
        return 1
    if n == m + 1:
        return q + 1 if m == 0 else q
    return 0


def enumerated_N(shape: TreeShape, m: int, n: int) -> int:
    """N_{m,n} by counting b-preimages directly on the tree."""
    counts: Counter = Counter(backward_shift(v) for v in level(shape, n))
    return max((counts.get(w, 0) for w in level(shape, m)), default=0)


def _c(q: int, n: int) -> int:
    return 1 if n == 0 else (q + 1) * q ** (n - 1)


def hardy_alpha(q: int, n: int) -> float:
    """α_n = (1/c_n) Σ_m N_{m,n} c_m, computed in exact rationals."""
    if n < 0:
        raise ValueError(f"level must be non-negative, got {n}")
    total = sum(combinatorial_N(q, m, n) * _c(q, m) for m in range(n + 1))
    return float(Fraction(total, _c(q, n)))


def hardy_alpha_sup(q: int, N: int) -> float:
    return max(hardy_alpha(q, n) for n in range(N + 1))


# --- norm bounds ------------------------------------------------------------


@dataclass
class NormBounds:
    lower: float
    upper: float
    cb_norm: float
    d_norm: float | None
    source: str
    certified: bool = True

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "cb_norm": self.cb_norm,
            "d_norm": self.d_norm,
            "source": self.source,
            "certified": self.certified,
        }


def operator_norm_bounds(space: Space, shape: TreeShape, N: int = 8, cap: float = DEFAULT_UNBOUNDED_CAP) -> NormBounds:
    """max(0, 1 - ‖C_b‖) ≤ ‖D‖ ≤ 1 + ‖C_b‖, with ‖C_b‖ from the space's criterion.

    ``d_norm`` carries the value of ‖D‖ from its closed form.  For weighted
    spaces the ratio supremum is a partial one unless the weight certifies it;
    ``certified`` is False in that case.
    """
    certified = True
    if isinstance(space, Lipschitz):
        cb = lipschitz_lambda_b(shape, max(N, 2))
        d_norm, source = 1 + cb, f"‖C_b‖ = λ_b = {cb:g} (depth {max(N, 2)})"
    elif isinstance(space, Weighted):
        ratios = weighted_ratio_sup(space.weight, shape, max(N, 1), cap=cap)
        ratio, certified = ratios.value, ratios.attained
        # the root contributes μ(o)/μ(b(o)) = 1 to ‖C_b‖ but not to ‖D‖
        cb = max(1.0, ratio)
        d_norm = 1 + ratio
        source = f"‖C_b‖ = max(1, sup μ(v)/μ(b(v))) = {cb:g}; ‖D‖ = 1 + {ratio:g} (depth {max(N, 1)})"
    elif isinstance(space, Hardy):
        alpha = hardy_alpha_sup(space.params.q, N)
        cb = alpha ** (1.0 / space.params.p)
        d_norm, source = 1 + cb, f"‖C_b‖ = α^(1/p) = {cb:g} (α over n ≤ {N})"
    else:
        raise TypeError(f"unknown space {space!r}")
    return NormBounds(max(0.0, 1 - cb), 1 + cb, cb, d_norm, source, certified)


@dataclass
class WitnessResult:
    value: float
    best: int
    best_label: str
    certified: bool
    ratios: list[float]


def operator_norm_lower_witness(
    op: Operator, family: Sequence[TreeFunction], space: Space, shape: TreeShape, N: int
) -> WitnessResult:
    """max over the family of ‖op f‖ / ‖f‖ on the truncation.

    The result is a certified lower bound of ‖op‖ only when both norm reports
    of the maximizing member are exact.
    """
    best, best_i, certified = -math.inf, -1, False
    ratios = []
    for i, f in enumerate(family):
        nf = space.norm(f, shape, N)
        if nf.value <= 0:
            raise ValueError(f"family member {i} ({f.describe()}) has zero norm on the truncation at depth {N}")
        nop = space.norm(apply(op, f, shape), shape, N)
        r = nop.value / nf.value
        ratios.append(r)
        if r > best:
            best, best_i, certified = r, i, nf.attained and nop.attained
    if best_i < 0:
        raise ValueError("empty witness family")
    return WitnessResult(best, best_i, family[best_i].describe(), certified, ratios)


# --- eigenvalues ------------------------------------------------------------

ONLY_ZERO = "OnlyZeroFunction"
CONSTANTS_ONLY = "ConstantsOnly"


@dataclass
class EigenClassification:
    lam: complex
    verdict: str
    trace: list[tuple[Vertex, complex]]
    root_free: bool
    note: str = ""

    def to_json(self, trace_limit: int | None = 64) -> dict:
        trace = self.trace if trace_limit is None else self.trace[:trace_limit]
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "verdict": self.verdict,
            "root_free": self.root_free,
            "trace_length": len(self.trace),
            "trace": [[list(v), [z.real, z.imag]] for v, z in trace],
            "note": self.note,
        }


def eigen_classify(lam: complex, shape: TreeShape, N: int, has_constants: bool) -> EigenClassification:
    """Solve Dg = λg on the ball of radius N by forcing values level by level.

    Values are tracked in units of g(o): each trace entry (v, c) means
    g(v) = c·g(o).  When the root equation forces g(o) = 0 the whole trace is 0.
    The forcing is exact at every depth, so the verdict holds for the infinite tree.
    """
    if N < 1:
        raise ValueError(f"depth must be at least 1, got {N}")
    lam = complex(lam)
    trace: list[tuple[Vertex, complex]] = []
    if lam == 1:
        # g(v) - g(b(v)) = g(v) on T* forces g(b(v)) = 0, and every vertex has a child
        for n in range(N):
            for w in level(shape, n):
                assert children(shape, w)
                trace.append((w, 0j))
        return EigenClassification(lam, ONLY_ZERO, trace, False, "g(b(w)) = 0 for every w in T*")
    # root: λ g(o) = (Dg)(o) = 0
    root_free = lam == 0
    coeff: dict[Vertex, complex] = {(): 1 + 0j if root_free else 0j}
    trace.append(((), coeff[()]))
    for n in range(1, N + 1):
        for v in level(shape, n):
            # (1 - λ) g(v) = g(b(v))
            coeff[v] = coeff[backward_shift(v)] / (1 - lam)
            trace.append((v, coeff[v]))
    if root_free:
        constant = all(c == 1 for _, c in trace)
        assert constant
        verdict = CONSTANTS_ONLY if has_constants else ONLY_ZERO
        note = "solutions are the constants" + ("" if has_constants else ", which are not in the space")
    else:
        assert all(c == 0 for _, c in trace)
        verdict, note = ONLY_ZERO, "λ g(o) = 0 forces g(o) = 0, then g(v) = g(b(v))/(1-λ) = 0"
    return EigenClassification(lam, verdict, trace, root_free, note)


# --- spectrum ---------------------------------------------------------------


@dataclass(frozen=True)
class DiskRegion:
    center: complex
    radius: float

    def contains(self, z: complex) -> bool:
        return abs(complex(z) - self.center) <= self.radius + DISK_TOLERANCE

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "radius": self.radius}


@dataclass
class SpectrumReport:
    regions: list[DiskRegion]
    exact: DiskRegion | None
    members: list[complex]
    point_spectrum: list[complex]
    notes: list[str]
    certified_point_spectrum: bool = True

    def contains(self, z: complex) -> bool:
        """Membership in the bounding set (the intersection of all regions)."""
        return all(r.contains(z) for r in self.regions)

    def to_json(self) -> dict:
        return {
            "regions": [r.to_json() for r in self.regions],
            "exact": self.exact.to_json() if self.exact else None,
            "members": [[z.real, z.imag] for z in self.members],
            "point_spectrum": [[z.real, z.imag] for z in self.point_spectrum],
            "point_spectrum_certified": self.certified_point_spectrum,
            "notes": self.notes,
        }


def spectrum_bounds(space: Space, shape: TreeShape, N: int = 8, cap: float = DEFAULT_UNBOUNDED_CAP) -> SpectrumReport:
    """Bounding disks for σ(D), known members, and the point spectrum."""
    space.check_shape(shape)
    bounds = operator_norm_bounds(space, shape, N, cap)
    regions = [DiskRegion(0j, bounds.d_norm), DiskRegion(1 + 0j, bounds.cb_norm)]
    notes = []
    members = []
    if has_branching(shape, N):
        # χ_w is in all three spaces and is not constant on children, so C_b is not onto
        members.append(1 + 0j)
        notes.append("1 ∈ σ(D): C_b is not surjective (χ_w is not constant on children)")
    else:
        notes.append("path tree: surjectivity of C_b is not decided here")
    has_constants, certified = space.contains_constants()
    point = [0j] if has_constants else []
    exact = None
    if isinstance(space, Lipschitz):
        exact = DiskRegion(1 + 0j, 1.0)
        notes.append("σ(D) equals the closed disk of radius 1 at 1 (analytic fact, not recomputed)")
    if not certified:
        notes.append("boundedness of the weight decided heuristically")
    if not bounds.certified:
        notes.append(f"radii use a partial ratio supremum at depth {N}; raise the depth or lower the cap to probe divergence")
    return SpectrumReport(regions, exact, members, point, notes, certified)


# --- surjectivity witness ---------------------------------------------------


@dataclass
class ChildrenCheck:
    constant: bool
    counterexample: tuple[Vertex, Vertex] | None = None


def constant_on_children_check(f: TreeFunction, shape: TreeShape, N: int, tol: float = 1e-12) -> ChildrenCheck:
    """Is f constant on ch(v) for every |v| ≤ N-1?  Returns the first violating sibling pair."""
    if N < 1:
        raise ValueError(f"depth must be at least 1, got {N}")
    for n in range(N):
        for v in level(shape, n):
            kids = children(shape, v)
            first = f.evaluate(kids[0])
            for u in kids[1:]:
                if abs(f.evaluate(u) - first) > tol:
                    return ChildrenCheck(False, (kids[0], u))
    return ChildrenCheck(True)


# --- finite sections --------------------------------------------------------

FINITE_SECTION_WARNING = (
    "finite sections are lower triangular, so their eigenvalues are just the diagonal; "
    "they do not approximate the spectrum of D (on the Lipschitz space it is the whole closed disk of radius 1 at 1)"
)


@dataclass
class TruncationMatrix:
    vertices: list[Vertex]
    matrix: sp.csr_matrix

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def eigenvalues(self) -> Counter:
        """Multiset of eigenvalues, read off the diagonal."""
        return Counter(complex(z) for z in self.diagonal)

    def is_lower_triangular(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.col <= coo.row))

    def to_json(self) -> dict:
        dense = self.matrix.toarray()
        rows = [[_entry(z) for z in row] for row in dense]
        return {
            "order": [list(v) for v in self.vertices],
            "rows": rows,
            "diagonal": [_entry(z) for z in self.diagonal],
            "warning": FINITE_SECTION_WARNING,
        }


def _entry(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def truncation_matrix(op: Operator, shape: TreeShape, N: int, cap: int = DEFAULT_MATRIX_CAP) -> TruncationMatrix:
    """Matrix of ``op`` on the ball of radius N in level-lexicographic order.

    Entry [v, u] is the coefficient of f(u) in (op f)(v).
    """
    dim = ball_size(shape, N)
    if dim > cap:
        raise RangeError(f"finite section of dimension {dim} exceeds the cap {cap}")
    vertices = list(ball(shape, N))
    index = {v: i for i, v in enumerate(vertices)}
    m = _section(op, vertices, index)
    return TruncationMatrix(vertices, m.tocsr())


def _section(op: Operator, vertices: list[Vertex], index: dict[Vertex, int]) -> sp.spmatrix:
    dim = len(vertices)
    dtype = complex
    if op.kind == "Identity":
        return sp.identity(dim, dtype=dtype, format="csr")
    if op.kind in ("BackwardComposition", "Composition"):
        phi = backward_shift if op.kind == "BackwardComposition" else op.phi
        rows, cols = [], []
        for i, v in enumerate(vertices):
            image = tuple(phi(v))
            if image not in index:
                raise RangeError(f"{op} maps {list(v)} outside the truncation")
            rows.append(i)
            cols.append(index[image])
        return sp.csr_matrix((np.ones(dim, dtype=dtype), (rows, cols)), shape=(dim, dim))
    if op.kind == "Differentiation":
        return _section(combo((1, I), (-1, CB)), vertices, index)
    total = sp.csr_matrix((dim, dim), dtype=dtype)
    for c, sub in op.terms:
        total = total + c * _section(sub, vertices, index)
    return total


def parse_complex(text: str) -> complex:
    """``re,im`` or a single real number."""
    parts = [float(x) for x in text.split(",")]
    if len(parts) not in (1, 2):
        raise ValueError(f"expected 're,im', got {text!r}")
    return complex(*parts)


def lambda_grid(n_side: int = 10, half_width: float = 3.0, include: Sequence[complex] = (1, 2)) -> list[complex]:
    """Points of an n_side × n_side grid over [-w, w]², with ``include`` swapped in, excluding 0."""
    step = 2 * half_width / (n_side - 1)
    grid = [complex(-half_width + i * step, -half_width + j * step) for i in range(n_side) for j in range(n_side)]
    grid = [z for z in grid if z != 0]
    for k, z in enumerate(include):
        if z not in grid:
            grid[k] = complex(z)
    return grid[: n_side * n_side]

