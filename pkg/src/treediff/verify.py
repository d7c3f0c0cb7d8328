"""Reproduction checks for every closed-form quantity of the theory.

Each criterion produces one or more ``Check`` records with the expected
value, the computed value, the tolerance and a short provenance tag.  The CLI
``verify`` command runs them all; the exit status is 0 iff none failed.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass
from typing import Callable, Iterator

import numpy as np

from . import expr as dsl
from . import functions as fm
from . import operators as ops
from .errors import UnboundedOperatorError
from .spaces import (
    Hardy,
    HardyParams,
    Lipschitz,
    Weighted,
    hardy_level_mean,
    hardy_partial_norm,
    lipschitz_partial_norm,
    point_eval_bound,
    weighted_partial_norm,
)
from .tree import ConstantChildren, Homogeneous, TreeShape, Vertex, ball, level
from .weights import geometric_weight, odd_even_weight, unit_weight

TOL = 1e-12
PASS, FAIL, SKIP = "pass", "fail", "skipped"


@dataclass
class Check:
    criterion: int
    name: str
    expected: object
    computed: object
    tolerance: float | None
    provenance: str
    status: str

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class VerifyConfig:
    shape: TreeShape | None = None
    depth: int | None = None
    seed: int = 0


def _close(a: float, b: float, tol: float = TOL) -> bool:
    return abs(a - b) <= tol


def _check(criterion, name, expected, computed, ok, provenance, tolerance=TOL) -> Check:
    return Check(criterion, name, expected, computed, tolerance, provenance, PASS if ok else FAIL)


def _skip(criterion, name, provenance) -> Check:
    return Check(criterion, name, None, None, None, provenance, SKIP)


def _runs(cfg: VerifyConfig, shape: TreeShape) -> bool:
    return cfg.shape is None or cfg.shape == shape


def _any_tree(cfg: VerifyConfig) -> TreeShape:
    return cfg.shape or Homogeneous(2)


def _vertex(shape: TreeShape, length: int) -> Vertex:
    """A non-leftmost vertex of the given length when the tree allows one."""
    return tuple(min(1, shape.branching(d) - 1) for d in range(length))


# --- random generators (seeded) ---------------------------------------------


def random_sparse(rng: random.Random, shape: TreeShape, max_depth: int = 5, max_entries: int = 6) -> fm.Sparse:
    entries = {}
    for _ in range(rng.randint(1, max_entries)):
        depth = rng.randint(0, max_depth)
        v = tuple(rng.randrange(shape.branching(d)) for d in range(depth))
        entries[v] = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
    return fm.Sparse(entries)


def random_expr(rng: random.Random, depth: int = 3) -> dsl.Expr:
    if depth == 0 or rng.random() < 0.25:
        kind = rng.choice(["num", "num", "var", "param"])
        if kind == "num":
            text = rng.choice([str(rng.randint(0, 9)), f"{rng.randint(0, 9)}.{rng.randint(0, 99):02d}"])
            return dsl.Number(float(text), text)
        return dsl.Var() if kind == "var" else dsl.Param(rng.choice(["M", "q"]))
    kind = rng.choice(["bin", "bin", "bin", "neg", "call"])
    if kind == "neg":
        return dsl.Neg(random_expr(rng, depth - 1))
    if kind == "call":
        return dsl.Call(rng.choice(dsl.BUILTINS), (random_expr(rng, depth - 1), random_expr(rng, depth - 1)))
    return dsl.BinOp(rng.choice("+-*/^"), random_expr(rng, depth - 1), random_expr(rng, depth - 1))


def _outcome(e: dsl.Expr, n: int, env) -> object:
    try:
        return dsl.eval_radial(e, n, env)
    except Exception as exc:  # compared by type only
        return type(exc).__name__


# --- criteria ---------------------------------------------------------------


def criterion_1(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "characteristic functions: Lipschitz norm 2 at the root, 1 elsewhere"
    for shape in (Homogeneous(2), ConstantChildren(2)):
        for length in (0, 1, 2, 3):
            name = f"‖χ_w‖_L, |w|={length}, {shape}"
            if not _runs(cfg, shape):
                yield _skip(1, name, tag)
                continue
            w = _vertex(shape, length)
            report = lipschitz_partial_norm(fm.characteristic(w), shape, length + 2)
            expected = 2.0 if length == 0 else 1.0
            yield _check(1, name, expected, report.value, _close(report.value, expected) and report.attained, tag)


def criterion_2(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "second derivative of χ_w is 1, -2, 1 on w, its children, its grandchildren; ‖D‖ = 2 on L"
    for shape in (Homogeneous(2), ConstantChildren(2)):
        for length in (1, 2, 3):
            name = f"‖Dχ_w‖/‖χ_w‖ on L, |w|={length}, {shape}"
            if not _runs(cfg, shape):
                yield _skip(2, name, tag)
                continue
            w = _vertex(shape, length)
            N = length + 2
            chi = fm.characteristic(w)
            second = fm.derivative(fm.derivative(chi, shape), shape)
            pattern_ok = True
            for v in ball(shape, N):
                if v == w or (len(v) == len(w) + 2 and v[: len(w)] == w):
                    want = 1
                elif len(v) == len(w) + 1 and v[: len(w)] == w:
                    want = -2
                else:
                    want = 0
                pattern_ok &= second.evaluate(v) == want
            result = ops.operator_norm_lower_witness(ops.D, [chi], Lipschitz(), shape, N)
            ok = pattern_ok and _close(result.value, 2.0) and result.certified
            yield _check(2, name, 2.0, result.value, ok, tag)


def criterion_3(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "λ_b = sup d(b(v), b(b(v))) = 1"
    top = cfg.depth or 8
    for shape in [Homogeneous(q) for q in (1, 2, 3)] + [ConstantChildren(k) for k in (1, 2, 3)]:
        name = f"λ_b for depths 2..{top}, {shape}"
        if not _runs(cfg, shape):
            yield _skip(3, name, tag)
            continue
        values = [ops.lipschitz_lambda_b(shape, N) for N in range(2, top + 1)]
        yield _check(3, name, 1.0, max(values), all(v == 1.0 for v in values), tag)


def criterion_4(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "μ_M = (M-1)^|v|: ratio M-1 on every level, ‖D‖ = M, ‖g‖_μ = 1"
    shape = _any_tree(cfg)
    N = 6
    for M in (1.5, 2.0, 3.0):
        mu = geometric_weight(M)
        ratios = ops.weighted_ratio_sup(mu, shape, N)
        level_ok = all(_close(mu.ratio(n), M - 1) for n in range(1, N + 1))
        g = fm.alternating_witness(mu)
        g_norm = weighted_partial_norm(g, mu, shape, N)
        witness = ops.operator_norm_lower_witness(ops.D, [g], Weighted(mu), shape, N)
        ok = (
            level_ok
            and ratios.attained
            and _close(1 + ratios.value, M)
            and _close(g_norm.value, 1.0)
            and g_norm.attained
            and _close(witness.value, M)
            and witness.certified
        )
        yield _check(4, f"‖D‖ on L∞_μ_M, M={M}", M, witness.value, ok, tag)


def criterion_5(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "odd/even weight: ratio 2n+1 at depth 2n+1, D unbounded"
    shape = _any_tree(cfg)
    mu = odd_even_weight()
    report = ops.weighted_ratio_sup(mu, shape, 11)
    partial = dict(report.partials)
    for n in range(6):
        d = 2 * n + 1
        yield _check(5, f"ratio sup at depth {d}", float(d), partial[d], _close(partial[d], d), tag)
    for N in (11, 12, 13):
        try:
            ops.weighted_ratio_sup(mu, shape, N, cap=10)
            fired = False
        except UnboundedOperatorError:
            fired = True
        yield _check(5, f"unbounded signal with cap 10 at depth {N}", True, fired, fired, tag, None)
    try:
        ops.weighted_ratio_sup(mu, shape, 10, cap=10)
        quiet = True
    except UnboundedOperatorError:
        quiet = False
    yield _check(5, "no signal with cap 10 at depth 10", True, quiet, quiet, tag, None)


def criterion_6(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "Hardy witness: M_p(n,f) = 1,1,0,... and M_p(n,Df) = 0,2,1,0,..."
    for q in (1, 2, 3):
        for p in (1, 2, 3):
            name = f"Hardy witness table q={q} p={p}"
            if not _runs(cfg, Homogeneous(q)):
                yield _skip(6, name, tag)
                continue
            params = HardyParams(q, p)
            f = fm.hardy_witness()
            df = fm.derivative(f)
            got_f = [hardy_level_mean(f, params, n) for n in range(5)]
            got_df = [hardy_level_mean(df, params, n) for n in range(5)]
            ok = all(_close(a, b) for a, b in zip(got_f, [1, 1, 0, 0, 0]))
            ok &= all(_close(a, b) for a, b in zip(got_df, [0, 2, 1, 0, 0]))
            nf, ndf = hardy_partial_norm(f, params, 4), hardy_partial_norm(df, params, 4)
            ok &= _close(nf.value, 1) and _close(ndf.value, 2) and nf.attained and ndf.attained
            yield _check(6, name, [[1, 1, 0, 0, 0], [0, 2, 1, 0, 0]], [got_f, got_df], ok, tag)


def criterion_7(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "α_n = 1 for all n, so ‖C_b‖ = 1 and 0 ≤ ‖D‖ ≤ 2 on T_p"
    for q in (1, 2, 3):
        name = f"α_n, n ≤ 12, q={q}"
        if not _runs(cfg, Homogeneous(q)):
            yield _skip(7, name, tag)
            continue
        alphas = [ops.hardy_alpha(q, n) for n in range(13)]
        ok = all(a == 1.0 for a in alphas)
        for p in (1, 2, 3):
            b = ops.operator_norm_bounds(Hardy(HardyParams(q, p)), Homogeneous(q), 12)
            ok &= b.cb_norm == 1.0 and b.lower == 0.0 and b.upper == 2.0
        yield _check(7, name, [1.0] * 13, alphas, ok, tag)


def criterion_8(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "σ_p(D) = {0} with constants, empty otherwise"
    shape = _any_tree(cfg)
    depth = cfg.depth or 8
    grid = ops.lambda_grid()
    verdicts = [ops.eigen_classify(lam, shape, depth, True).verdict for lam in grid]
    ok = len(grid) == 100 and 0 not in grid and 1 in grid and 2 in grid
    ok &= all(v == ops.ONLY_ZERO for v in verdicts)
    yield _check(8, f"λ ≠ 0 on a {len(grid)}-point grid, depth {depth}", ops.ONLY_ZERO, sorted(set(verdicts)), ok, tag, None)
    zero = ops.eigen_classify(0, shape, depth, True).verdict
    yield _check(8, "λ = 0 with constants", ops.CONSTANTS_ONLY, zero, zero == ops.CONSTANTS_ONLY, tag, None)
    zero_nc = ops.eigen_classify(0, shape, depth, False).verdict
    yield _check(8, "λ = 0 without constants", ops.ONLY_ZERO, zero_nc, zero_nc == ops.ONLY_ZERO, tag, None)


def criterion_9(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "constant functions have Hardy norm |c|"
    rng = random.Random(cfg.seed)
    for q in (1, 2, 3):
        for p in (1, 2):
            name = f"‖constant‖_p, q={q} p={p}"
            if not _runs(cfg, Homogeneous(q)):
                yield _skip(9, name, tag)
                continue
            c = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
            params = HardyParams(q, p)
            radial = hardy_partial_norm(fm.constant(c), params, 5)
            # same function as an opaque rule, so every level is enumerated
            rule = fm.Rule(lambda v, c=c: c, "constant rule")
            enumerated = hardy_partial_norm(rule, params, 5)
            ok = _close(radial.value, abs(c)) and radial.attained
            ok &= abs(enumerated.value - abs(c)) <= TOL * max(1.0, abs(c))
            yield _check(9, name, abs(c), enumerated.value, ok, tag)


def criterion_10(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "finite sections of C_b and D are triangular with diagonals 1,0,... and 0,1,..."
    shape = Homogeneous(2)
    if not _runs(cfg, shape):
        yield _skip(10, "finite sections, homogeneous:2, N=3", tag)
        return
    cb = ops.truncation_matrix(ops.CB, shape, 3)
    d = ops.truncation_matrix(ops.D, shape, 3)
    dim = len(cb.vertices)
    ok = dim == 22 and cb.is_lower_triangular() and d.is_lower_triangular()
    ok &= cb.eigenvalues() == {1: 1, 0: 21} and d.eigenvalues() == {0: 1, 1: 21}
    total = (cb.matrix + d.matrix).toarray()
    ok &= bool(np.array_equal(total, np.eye(dim)))
    yield _check(10, "finite sections, homogeneous:2, N=3", {"dim": 22, "Cb": "1x1,0x21", "D": "0x1,1x21"}, dim, ok, tag, 0.0)


def criterion_11(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "radial fast path equals enumeration; N_{m,n} equals preimage counts"
    for q in (1, 2, 3):
        name = f"Hardy means fast path vs enumeration, q={q}"
        if not _runs(cfg, Homogeneous(q)):
            yield _skip(11, name, tag)
            yield _skip(11, f"N_m,n vs enumeration, q={q}", tag)
            continue
        f = fm.Radial((0.5 - 1j, 2, -3.25, 0.125j, 7, 1.5), -0.75)
        worst = 0.0
        for p in (1, 2, 3):
            params = HardyParams(q, p)
            for n in range(7):
                fast = hardy_level_mean(f, params, n)
                slow = hardy_level_mean(f, params, n, exhaustive=True)
                worst = max(worst, abs(fast - slow) / max(abs(slow), 1e-300))
        yield _check(11, name, 0.0, worst, worst <= TOL, tag)
        shape = Homogeneous(q)
        mismatches = [
            (m, n)
            for n in range(6)
            for m in range(n + 2)
            if ops.combinatorial_N(q, m, n) != ops.enumerated_N(shape, m, n)
        ]
        yield _check(11, f"N_m,n vs enumeration, q={q}", [], mismatches, not mismatches, tag, 0.0)


def criterion_12(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "point-evaluation estimates on L, L∞_μ and T_p"
    shape = _any_tree(cfg)
    spaces = [("lipschitz", Lipschitz()), ("weighted μ≡1", Weighted(unit_weight())), ("weighted μ_3", Weighted(geometric_weight(3)))]
    if isinstance(shape, Homogeneous):
        spaces.append((f"hardy q={shape.q} p=2", Hardy(HardyParams(shape.q, 2))))
    else:
        yield _skip(12, "hardy", tag)
    for label, space in spaces:
        rng = random.Random(cfg.seed)
        worst = math.inf
        for _ in range(100):
            f = random_sparse(rng, shape)
            for v in [v for n in range(6) for v in level(shape, n)]:
                worst = min(worst, point_eval_bound(space, f, v, shape, 5).slack)
        yield _check(12, f"min slack, {label}", ">= -1e-12", worst, worst >= -TOL, tag)


def criterion_13(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "D is not an isometry: a unit-norm f with ‖Df‖ ≠ ‖f‖"
    shape = _any_tree(cfg)
    spaces = [("lipschitz", Lipschitz()), ("weighted μ≡1", Weighted(unit_weight()))]
    if isinstance(shape, Homogeneous):
        spaces.append((f"hardy q={shape.q} p=2", Hardy(HardyParams(shape.q, 2))))
    for label, space in spaces:
        f = fm.constant(1)
        nf = space.norm(f, shape, 4)
        ndf = space.norm(ops.apply(ops.D, f, shape), shape, 4)
        ok = _close(nf.value, 1) and ndf.value == 0 and nf.attained and ndf.attained
        yield _check(13, f"constant(1), {label}", [1.0, 0.0], [nf.value, ndf.value], ok, tag)
    # unbounded weight: constants are not in the space; use the alternating witness
    mu = geometric_weight(3)
    g = fm.alternating_witness(mu)
    ng = weighted_partial_norm(g, mu, shape, 4)
    ndg = weighted_partial_norm(fm.derivative(g), mu, shape, 4)
    ok = _close(ng.value, 1) and _close(ndg.value, 3) and ng.attained and ndg.attained
    yield _check(13, "alternating witness, weighted μ_3", [1.0, 3.0], [ng.value, ndg.value], ok, tag)


def criterion_14(cfg: VerifyConfig) -> Iterator[Check]:
    tag = "expression language precedence and round trip"
    goldens = {"2+3*4": 14.0, "2*3^2": 18.0, "-2^2": -4.0, "(2+3)*4": 20.0}
    for text, want in goldens.items():
        got = dsl.eval_radial(dsl.parse(text), 0)
        yield _check(14, f"eval {text!r}", want, got, got == want, tag, 0.0)
    rng = random.Random(cfg.seed)
    env = {"M": 3.0, "q": 2.0}
    bad = []
    for i in range(50):
        e = random_expr(rng, 4)
        back = dsl.parse(dsl.format(e))
        for n in range(21):
            if _outcome(e, n, env) != _outcome(back, n, env):
                bad.append(dsl.format(e))
                break
    yield _check(14, "round trip over 50 seeded expressions, n ≤ 20", [], bad, not bad, tag, 0.0)


CRITERIA: list[Callable[[VerifyConfig], Iterator[Check]]] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
    criterion_13,
    criterion_14,
]


def run(cfg: VerifyConfig | None = None) -> list[Check]:
    cfg = cfg or VerifyConfig()
    checks = []
    for criterion in CRITERIA:
        checks.extend(criterion(cfg))
    return checks
