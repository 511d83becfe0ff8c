import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from sfion.bspline import (BSplineBasis, BSplineError, assemble_dense, assemble_matrix,
                           build_knots, collocate, eval_splines, gauss_rule)


def test_uniform_knots_have_equal_intervals():
    kn = build_knots(10, 4, 0.0, 1.0, 0)
    widths = kn.interval_widths
    assert widths.size == 7
    np.testing.assert_allclose(widths, 1 / 7, rtol=1e-14)
    assert kn.knots.size == 14
    assert np.all(kn.knots[:4] == 0.0) and np.all(kn.knots[-4:] == 1.0)


def test_geometric_progression_layout():
    kn = build_knots(350, 10, 1.0, 500.0, geometric_count=40, g=1.05)
    w = kn.interval_widths
    np.testing.assert_allclose(w[1:41] / w[:40], 1.05, rtol=1e-12)
    np.testing.assert_allclose(w[40:], w[40], rtol=1e-10)
    assert kn.knots[0] == 1.0 and kn.knots[-1] == 500.0
    assert kn.n_splines == 350


@given(n=st.integers(5, 80), k=st.integers(2, 10), m=st.integers(0, 30),
       g=st.floats(1.0, 1.2), lo=st.floats(-10, 10), span=st.floats(0.1, 100))
def test_knots_nondecreasing_and_counted(n, k, m, g, lo, span):
    if n <= k or m > n - k + 1:
        with pytest.raises(BSplineError):
            build_knots(n, k, lo, lo + span, m, g)
        return
    kn = build_knots(n, k, lo, lo + span, m, g)
    assert np.all(np.diff(kn.knots) >= 0)
    assert kn.knots.size == n + k
    assert kn.x_min == lo and kn.x_max == lo + span


@pytest.mark.parametrize("args", [(4, 4, 0, 1), (10, 4, 1, 0), (10, 4, 0, 1, 8), (10, 1, 0, 1)])
def test_bad_knot_parameters(args):
    with pytest.raises(BSplineError):
        build_knots(*args)


def test_partition_of_unity_random_points():
    rng = np.random.default_rng(7)
    kn = build_knots(60, 8, 0.0, 50.0, 20, 1.05)
    basis = BSplineBasis(kn)
    x = rng.uniform(0.0, 50.0, 1000)
    vals = collocate(basis, x)
    assert np.max(np.abs(vals.sum(axis=1) - 1.0)) < 1e-12
    assert np.all(vals >= 0.0)
    assert np.all((vals > 0).sum(axis=1) <= 8)


def test_eval_splines_single_point():
    basis = BSplineBasis(build_knots(12, 5, 0.0, 3.0))
    pairs = eval_splines(basis, 1.234)
    assert len(pairs) <= 5
    assert abs(sum(v for _, v in pairs) - 1.0) < 1e-14
    with pytest.raises(BSplineError):
        eval_splines(basis, 3.5)


def test_linear_hat_midpoint():
    # order 2 on uniform knots: hat of spline 1 peaks at x=1, support [0, 2]
    basis = BSplineBasis(build_knots(5, 2, 0.0, 4.0))
    vals = dict(eval_splines(basis, 0.5))
    assert vals[1] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("k", [3, 4, 8])
def test_continuity_at_breakpoints(k):
    basis = BSplineBasis(build_knots(15, k, 0.0, 2.0, 4, 1.1))
    for bp in basis.knots.breakpoints[1:-1]:
        left = collocate(basis, [bp], side="left")
        right = collocate(basis, [bp], side="right")
        np.testing.assert_allclose(left, right, atol=1e-13)


def test_derivative_matches_finite_difference():
    basis = BSplineBasis(build_knots(20, 6, 0.0, 5.0, 5, 1.1))
    x = np.linspace(0.013, 4.97, 37)
    _, der = collocate(basis, x, deriv=1)
    h = 1e-6
    fd = (collocate(basis, x + h) - collocate(basis, x - h)) / (2 * h)
    np.testing.assert_allclose(der, fd, atol=1e-6)


def test_gauss_exactness_two_points():
    from sfion.bspline import gauss_legendre
    x, w = gauss_legendre(2, 0.0, 1.0)
    assert np.sum(w * x**2) == pytest.approx(1 / 3, abs=1e-15)


def test_gauss_three_point_nodes():
    from sfion.bspline import gauss_legendre
    x, w = gauss_legendre(3)
    np.testing.assert_allclose(x, [-np.sqrt(3 / 5), 0.0, np.sqrt(3 / 5)], atol=1e-15)
    np.testing.assert_allclose(w, [5 / 9, 8 / 9, 5 / 9], atol=1e-15)


@pytest.mark.parametrize("p", [1, 2, 4, 7, 10])
def test_rule_exact_on_monomials(p):
    kn = build_knots(14, 4, 0.5, 3.0, 3, 1.2)
    rule = gauss_rule(kn, p)
    np.testing.assert_allclose(rule.weights.sum(axis=1), kn.interval_widths, rtol=1e-14)
    assert np.all(rule.weights > 0)
    for deg in range(2 * p):
        exact = (3.0 ** (deg + 1) - 0.5 ** (deg + 1)) / (deg + 1)
        approx = np.sum(rule.flat_weights * rule.points ** deg)
        assert abs(approx - exact) / abs(exact) < 1e-13


def test_rule_rejects_zero_points():
    with pytest.raises(BSplineError):
        gauss_rule(build_knots(6, 3, 0, 1), 0)


def test_overlap_positive_definite_and_banded():
    basis = BSplineBasis(build_knots(40, 8, 0.0, 20.0, 10, 1.05), drop_first=True, drop_last=True)
    rule = gauss_rule(basis)
    s = assemble_matrix(basis, rule, 1.0)
    dense = s.to_dense()
    assert s.bandwidth == 7
    np.testing.assert_array_equal(dense, dense.T)
    assert np.all(np.triu(dense, 8) == 0)
    s.cholesky()
    linalg.cholesky(dense)


def test_zero_operator_gives_zero_matrix():
    basis = BSplineBasis(build_knots(10, 4, 0.0, 1.0))
    m = assemble_matrix(basis, gauss_rule(basis), lambda x: 0.0 * x)
    assert np.all(m.to_dense() == 0)


def test_single_piecewise_constant_overlap():
    from sfion.bspline import KnotSequence
    h = 0.37
    basis = BSplineBasis(KnotSequence(np.array([0.0, h]), 1))
    m = assemble_dense(basis, gauss_rule(basis, 1))
    assert m.shape == (1, 1)
    assert m[0, 0] == pytest.approx(h, abs=1e-15)


def test_boundary_flags_and_cross_matrix():
    kn = build_knots(12, 5, -1.0, 1.0)
    full = BSplineBasis(kn)
    inner = BSplineBasis(kn, True, True)
    assert inner.size == full.size - 2
    vals = collocate(inner, [-1.0, 1.0])
    assert np.all(vals == 0.0)
    rule = gauss_rule(kn)
    cross = assemble_dense(full, rule, 1.0, basis_b=inner)
    np.testing.assert_allclose(cross, assemble_dense(full, rule)[:, 1:-1], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.0, 7.0))
def test_eval_matches_collocate(x):
    basis = BSplineBasis(build_knots(16, 6, 0.0, 7.0, 6, 1.1), drop_first=True)
    pairs = eval_splines(basis, x)
    row = collocate(basis, [x])[0]
    for idx, v in pairs:
        assert row[idx] == pytest.approx(v, abs=1e-15)
    assert np.count_nonzero(row) == len(pairs)
