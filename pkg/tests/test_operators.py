import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treediff import functions as fm
from treediff import operators as ops
from treediff.errors import RangeError, UnboundedOperatorError
from treediff.spaces import Hardy, HardyParams, Lipschitz, Weighted
from treediff.tree import ConstantChildren, Homogeneous, PerLevel, backward_shift, distance
from treediff.verify import random_sparse
from treediff.weights import TableWeight, geometric_weight, odd_even_weight, parse_weight, unit_weight

from oracles import section_by_definition, vertices

SHAPE = Homogeneous(2)
SHAPES = [Homogeneous(1), Homogeneous(2), Homogeneous(3), ConstantChildren(1), ConstantChildren(2), ConstantChildren(3)]


def brute_lambda_b(shape, N):
    """sup over v, w in the ball with v ≠ w of d(b(v), b(w)) / d(v, w)."""
    verts = vertices(shape, N)
    best = 0.0
    for i, v in enumerate(verts):
        for w in verts[i + 1 :]:
            best = max(best, distance(shape, backward_shift(v), backward_shift(w)) / distance(shape, v, w))
    return best


# --- apply -------------------------------------------------------------------


def test_apply_examples():
    f = fm.characteristic((1, 0))
    assert ops.apply(ops.I, f) is f
    assert all(ops.apply(ops.D, fm.constant(4), SHAPE)(v) == 0 for v in vertices(SHAPE, 4))


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_d_equals_identity_minus_backward(seed):
    f = random_sparse(random.Random(seed), SHAPE)
    combo = ops.combo((1, ops.I), (-1, ops.CB))
    df = ops.apply(ops.D, f, SHAPE)
    cf = ops.apply(combo, f, SHAPE)
    for v in vertices(SHAPE, 6):
        assert abs(df(v) - cf(v)) <= 1e-12


def test_combo_is_flat():
    nested = ops.combo((2, ops.combo((1, ops.I), (-1, ops.CB))), (1, ops.D))
    assert all(sub.kind != "AffineCombo" for _, sub in nested.terms)
    f = fm.hardy_witness()
    g = ops.apply(nested, f, SHAPE)
    for v in vertices(SHAPE, 4):
        assert abs(g(v) - 3 * (f(v) - f(backward_shift(v)))) <= 1e-12


def test_parse_operator():
    assert ops.parse_operator("D") == ops.D
    assert ops.parse_operator("Cb") == ops.CB
    minus = ops.parse_operator("I-Cb")
    assert minus.kind == "AffineCombo"
    with pytest.raises(ValueError):
        ops.parse_operator("Q")


# --- λ_b ---------------------------------------------------------------------


@pytest.mark.parametrize("shape", SHAPES)
def test_lambda_b_is_one(shape):
    for N in range(2, 9):
        assert ops.lipschitz_lambda_b(shape, N) == 1


@pytest.mark.parametrize("shape", SHAPES)
def test_lambda_b_matches_enumeration(shape):
    for N in (1, 2, 3):
        assert ops.lipschitz_lambda_b(shape, N) == brute_lambda_b(shape, N)


def test_lambda_b_at_depth_one_is_zero():
    # the ball of radius 1 maps entirely onto the root
    assert ops.lipschitz_lambda_b(SHAPE, 1) == 0 == brute_lambda_b(SHAPE, 1)


# --- weighted ratios and weights ---------------------------------------------


@pytest.mark.parametrize("M", [1.5, 2, 3])
def test_geometric_weight_ratios(M):
    r = ops.weighted_ratio_sup(geometric_weight(M), SHAPE, 6)
    assert all(abs(v - (M - 1)) <= 1e-12 for _, v in r.partials)
    assert r.attained
    assert geometric_weight(M).ratio_settles_at() is not None


def test_unit_weight_ratio():
    r = ops.weighted_ratio_sup(unit_weight(), SHAPE, 4)
    assert r.value == 1


def test_odd_even_ratios_diverge():
    r = ops.weighted_ratio_sup(odd_even_weight(), SHAPE, 11)
    partials = dict(r.partials)
    for n in range(6):
        assert partials[2 * n + 1] == 2 * n + 1
    assert r.value == 11
    assert not r.attained
    with pytest.raises(UnboundedOperatorError) as info:
        ops.weighted_ratio_sup(odd_even_weight(), SHAPE, 11, cap=10)
    assert info.value.depth == 11


def test_weight_boundedness():
    assert unit_weight().bounded() == (True, True)
    assert geometric_weight(1.5).bounded() == (True, True)
    assert geometric_weight(3).bounded() == (False, True)
    assert odd_even_weight().bounded()[0] is False
    assert TableWeight((1, 5, 2)).bounded() == (True, True)


def test_table_weight_settles():
    w = TableWeight((1, 4, 2))
    assert w.ratio_settles_at() == 3
    assert [w.at(n) for n in range(5)] == [1, 4, 2, 2, 2]
    r = ops.weighted_ratio_sup(w, SHAPE, 5)
    assert r.value == 4 and r.attained


def test_expr_weight_certification():
    w = parse_weight("expr:ifzero(1,pow(2,n)*ifodd(3,1))")
    assert w.ratio_settles_at() is not None
    r = ops.weighted_ratio_sup(w, SHAPE, 6)
    assert r.attained and r.value == 6


# --- α_n ---------------------------------------------------------------------


@pytest.mark.parametrize("q", [1, 2, 3])
def test_alpha_is_one(q):
    for n in range(13):
        assert ops.hardy_alpha(q, n) == 1
    assert ops.hardy_alpha_sup(q, 12) == 1


@pytest.mark.parametrize("q", [1, 2, 3])
def test_combinatorial_N_matches_preimage_counts(q):
    shape = Homogeneous(q)
    for n in range(6):
        for m in range(n + 1):
            assert ops.combinatorial_N(q, m, n) == ops.enumerated_N(shape, m, n)


def test_preimage_count_by_hand():
    # b^{-1}(o) ∩ level 1 is the three children of the root
    assert ops.enumerated_N(SHAPE, 0, 1) == 3
    assert ops.enumerated_N(SHAPE, 0, 0) == 1
    assert ops.enumerated_N(SHAPE, 1, 2) == 2
    assert ops.enumerated_N(SHAPE, 0, 2) == 0


# --- norm bounds and witnesses -----------------------------------------------


def test_norm_bound_examples():
    b = ops.operator_norm_bounds(Lipschitz(), SHAPE)
    assert (b.lower, b.upper) == (0, 2)
    for q in (1, 2, 3):
        for p in (1, 2, 3.5):
            b = ops.operator_norm_bounds(Hardy(HardyParams(q, p)), Homogeneous(q))
            assert (b.lower, b.upper) == (0, 2)
    b = ops.operator_norm_bounds(Weighted(geometric_weight(3)), SHAPE)
    assert (b.lower, b.upper, b.cb_norm, b.d_norm) == (0, 3, 2, 3)
    assert b.certified


def test_weighted_cb_norm_includes_root():
    b = ops.operator_norm_bounds(Weighted(geometric_weight(1.5)), SHAPE)
    assert b.cb_norm == 1
    assert b.d_norm == 1.5


def test_norm_bounds_unbounded_signal():
    with pytest.raises(UnboundedOperatorError):
        ops.operator_norm_bounds(Weighted(odd_even_weight()), SHAPE, N=12, cap=10)
    b = ops.operator_norm_bounds(Weighted(odd_even_weight()), SHAPE, N=6)
    assert not b.certified


def test_lower_witness_examples():
    lip = ops.operator_norm_lower_witness(ops.D, [fm.characteristic((0, 1))], Lipschitz(), SHAPE, 4)
    assert lip.value == 2 and lip.certified
    hardy = ops.operator_norm_lower_witness(ops.D, [fm.hardy_witness()], Hardy(HardyParams(2, 2)), SHAPE, 4)
    assert hardy.value == 2 and hardy.certified
    mu = geometric_weight(3)
    weighted = ops.operator_norm_lower_witness(ops.D, [fm.alternating_witness(mu)], Weighted(mu), SHAPE, 5)
    assert abs(weighted.value - 3) <= 1e-12 and weighted.certified


def test_lower_witness_picks_best_and_rejects_zero():
    family = [fm.constant(1), fm.characteristic((0, 1))]
    r = ops.operator_norm_lower_witness(ops.D, family, Lipschitz(), SHAPE, 4)
    assert r.best == 1 and r.ratios[0] == 0
    with pytest.raises(ValueError):
        ops.operator_norm_lower_witness(ops.D, [fm.zero()], Lipschitz(), SHAPE, 4)


@pytest.mark.parametrize(
    "space", [Lipschitz(), Hardy(HardyParams(2, 1)), Weighted(geometric_weight(2)), Weighted(unit_weight())], ids=str
)
def test_witness_never_exceeds_upper_bound(space):
    rng = random.Random(7)
    upper = ops.operator_norm_bounds(space, SHAPE).upper
    family = [f for f in (random_sparse(rng, SHAPE, max_depth=4) for _ in range(30)) if f.entries]
    r = ops.operator_norm_lower_witness(ops.D, family, space, SHAPE, 5)
    assert r.value <= upper + 1e-12


# --- eigenvalues and spectrum ------------------------------------------------


def test_eigen_examples():
    assert ops.eigen_classify(0, SHAPE, 8, True).verdict == ops.CONSTANTS_ONLY
    assert ops.eigen_classify(0, SHAPE, 8, False).verdict == ops.ONLY_ZERO
    assert ops.eigen_classify(1, SHAPE, 8, True).verdict == ops.ONLY_ZERO
    r = ops.eigen_classify(0.5 + 0.5j, SHAPE, 4, True)
    assert r.verdict == ops.ONLY_ZERO
    assert r.trace[0] == ((), 0)
    assert all(z == 0 for _, z in r.trace)


def test_eigen_grid():
    grid = ops.lambda_grid()
    assert len(grid) == 100 and 0 not in grid and 1 in grid and 2 in grid
    assert any(abs(z) > 2 for z in grid)
    for lam in grid:
        assert ops.eigen_classify(lam, SHAPE, 5, True).verdict == ops.ONLY_ZERO


def test_constants_solve_the_zero_eigen_equation():
    r = ops.eigen_classify(0, SHAPE, 3, True)
    assert r.root_free and all(z == 1 for _, z in r.trace)


@pytest.mark.parametrize(
    "space, shape",
    [
        (Lipschitz(), SHAPE),
        (Lipschitz(), ConstantChildren(1)),
        (Hardy(HardyParams(2, 2)), SHAPE),
        (Weighted(geometric_weight(3)), SHAPE),
        (Weighted(geometric_weight(1.5)), SHAPE),
        (Weighted(unit_weight()), ConstantChildren(3)),
        (Weighted(TableWeight((1, 3, 2))), PerLevel((3, 2))),
    ],
    ids=lambda x: str(x),
)
def test_spectrum_invariants(space, shape):
    report = ops.spectrum_bounds(space, shape)
    for z in report.members + report.point_spectrum:
        assert report.contains(z)
    if shape != ConstantChildren(1):
        assert 1 in report.members


def test_spectrum_examples():
    lip = ops.spectrum_bounds(Lipschitz(), SHAPE)
    assert lip.exact == ops.DiskRegion(1, 1)
    assert lip.point_spectrum == [0] and lip.members == [1]
    hardy = ops.spectrum_bounds(Hardy(HardyParams(2, 2)), SHAPE)
    assert ops.DiskRegion(1, 1) in hardy.regions and hardy.exact is None
    assert hardy.point_spectrum == [0]
    weighted = ops.spectrum_bounds(Weighted(geometric_weight(3)), SHAPE)
    assert weighted.regions == [ops.DiskRegion(0, 3), ops.DiskRegion(1, 2)]
    assert weighted.point_spectrum == [] and weighted.members == [1]


def test_disk_tolerance():
    d = ops.DiskRegion(1, 1)
    assert d.contains(2 + 1e-13)
    assert not d.contains(2 + 1e-9)


def test_constant_on_children():
    check = ops.constant_on_children_check(fm.characteristic((0, 1)), SHAPE, 3)
    assert not check.constant
    assert check.counterexample == ((0, 0), (0, 1))
    assert ops.constant_on_children_check(fm.constant(2), SHAPE, 4).constant
    assert ops.constant_on_children_check(fm.hardy_witness(), SHAPE, 4).constant


# --- finite sections ---------------------------------------------------------


def _definition_matrix(op, shape, N):
    return np.array(section_by_definition(lambda u: ops.apply(op, fm.characteristic(u), shape), shape, N))


@pytest.mark.parametrize("op", [ops.I, ops.D, ops.CB, ops.combo((1, ops.I), (1, ops.CB))], ids=str)
def test_section_matches_definition(op):
    t = ops.truncation_matrix(op, SHAPE, 2)
    assert np.array_equal(t.matrix.toarray(), _definition_matrix(op, SHAPE, 2))
    assert t.is_lower_triangular()


def test_small_section_example():
    cb = ops.truncation_matrix(ops.CB, SHAPE, 1)
    assert cb.matrix.shape == (4, 4)
    assert list(cb.diagonal) == [1, 0, 0, 0]
    assert list(ops.truncation_matrix(ops.D, SHAPE, 1).diagonal) == [0, 1, 1, 1]
    assert np.array_equal(ops.truncation_matrix(ops.I, SHAPE, 2).matrix.toarray(), np.eye(10))


def test_section_sum_is_identity():
    d = ops.truncation_matrix(ops.D, SHAPE, 3)
    cb = ops.truncation_matrix(ops.CB, SHAPE, 3)
    assert d.matrix.shape == (22, 22)
    assert np.array_equal((d.matrix + cb.matrix).toarray(), np.eye(22))
    assert cb.eigenvalues() == {1: 1, 0: 21}
    assert d.eigenvalues() == {0: 1, 1: 21}


def test_section_cap_and_json():
    with pytest.raises(RangeError):
        ops.truncation_matrix(ops.D, Homogeneous(3), 9, cap=1000)
    js = ops.truncation_matrix(ops.CB, SHAPE, 1).to_json()
    assert js["order"] == [[], [0], [1], [2]]
    assert js["rows"][2] == [1, 0, 0, 0]
    assert "do not approximate" in js["warning"]


def test_parse_complex():
    assert ops.parse_complex("1,0") == 1
    assert ops.parse_complex("0.5,-2") == 0.5 - 2j
    assert ops.parse_complex("3") == 3
    with pytest.raises(ValueError):
        ops.parse_complex("1,2,3")
