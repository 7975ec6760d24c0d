from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklkit.algebra import SparsePolynomial
from dunklkit.errors import ArityMismatchError, IntertwineSolveError
from dunklkit.intertwine import (
    apply_intertwine,
    build_intertwine,
    intertwine_reduction,
    intertwine_residual,
    kernel_series,
    monomial_basis,
    restrict_f_lambda,
    series_tail_bound,
    xu_univariate,
)
from dunklkit.kernel import KernelConfig, kernel_reduce, kernel_xu
from dunklkit.quadrature import dirichlet_moment

from test_algebra import polynomials

x = SparsePolynomial.variables
CFG32 = KernelConfig(nodes_per_level=(32, 32), error_estimate=False)


def test_degree_zero_is_identity():
    tbl = build_intertwine(3, Fraction(1, 2), 2)
    assert apply_intertwine(tbl, SparsePolynomial.constant(3, 1)) == SparsePolynomial.constant(3, 1)


@pytest.mark.parametrize("k", [Fraction(1, 2), Fraction(1), Fraction(5, 2), Fraction(7, 3)])
def test_rank_one_degree_one(k):
    x1, x2 = x(2)
    got = apply_intertwine(build_intertwine(2, k, 1), x1)
    assert got == (x1.scale(k + 1) + x2.scale(k)).scale(1 / (2 * k + 1))


def test_rank_one_degree_one_dirichlet_moments():
    # V(x1)(lam) = E[<lam, t>] under Dir(k + 1, k)
    k = 0.6
    lam = np.array([1.3, -0.4])
    tbl = build_intertwine(2, k, 1)
    m = [dirichlet_moment([k + 1, k], e) / dirichlet_moment([k + 1, k], [0, 0]) for e in ([1, 0], [0, 1])]
    assert float(apply_intertwine(tbl, x(2)[0])(lam)) == pytest.approx(m[0] * lam[0] + m[1] * lam[1], rel=1e-13)


def test_small_k_is_near_identity():
    tbl = build_intertwine(2, 1e-8, 1)
    assert np.max(np.abs(tbl.matrix(1) - np.eye(2))) <= 1e-7


def test_symmetric_linear_is_fixed():
    s = sum(x(3), SparsePolynomial.zero(3))
    tbl = build_intertwine(3, Fraction(3, 4), 1)
    assert apply_intertwine(tbl, s) == s


@pytest.mark.parametrize("arity", [2, 3, 4])
@pytest.mark.parametrize("k", [Fraction(1, 2), Fraction(1), Fraction(5, 2)])
def test_defining_relation_exact(arity, k):
    tbl = build_intertwine(arity, k, 4 if arity < 4 else 3)
    zero = SparsePolynomial.zero(arity)
    for m in range(tbl.max_degree + 1):
        for e in monomial_basis(arity, m):
            for j in range(arity):
                assert intertwine_residual(tbl, SparsePolynomial.monomial(e), j) == zero


def test_float_table_matches_exact():
    exact = build_intertwine(3, Fraction(3, 2), 5)
    flt = build_intertwine(3, 1.5, 5)
    for m in range(6):
        np.testing.assert_allclose(flt.matrix(m), np.array(exact.matrix(m), dtype=float), atol=1e-12)
    assert max(flt.residuals) <= 1e-12


@given(polynomials(arity=3, max_degree=4))
@settings(max_examples=25, deadline=None)
def test_linear_and_degree_preserving(p):
    tbl = build_intertwine(3, Fraction(2, 3), 4)
    out = apply_intertwine(tbl, p)
    assert apply_intertwine(tbl, p.scale(5)) == out.scale(5)
    comps = out.homogeneous_components()
    assert set(comps) <= set(p.homogeneous_components())


def test_degree_above_table_rejected():
    tbl = build_intertwine(2, 1, 2)
    with pytest.raises(ValueError):
        apply_intertwine(tbl, x(2)[0] ** 3)
    with pytest.raises(ArityMismatchError):
        apply_intertwine(tbl, x(3)[0])


def test_solve_error_carries_context():
    err = IntertwineSolveError("boom", Fraction(1, 2), 3)
    assert err.k == Fraction(1, 2) and err.degree == 3


def test_default_caps_build_quickly():
    for arity, M in ((2, 30), (3, 20), (4, 12)):
        tbl = build_intertwine(arity, 0.75)
        assert tbl.max_degree == M


# -- series oracle ----------------------------------------------------------

def test_series_trivial_cases():
    assert kernel_series([0.0, 0.0, 0.0], [1.0, 0.0, -1.0], 0.5, 10).value == 1.0
    assert kernel_series([0.3, 0.1], [1.0, -2.0], 0.5, 0).value == 1.0


def test_series_rank_zero_is_exponential_partial_sum():
    for M in (0, 3, 10):
        ref = math.fsum(0.7 ** m * 1.4 ** m / math.factorial(m) for m in range(M + 1))
        assert kernel_series([0.7], [1.4], 2.0, M).value == pytest.approx(ref, rel=1e-14)


def test_series_bound_and_flag():
    rep = kernel_series([1.0, -1.0], [1.0, -1.0], 0.5, 4)
    assert rep.error_estimate == pytest.approx(series_tail_bound(2.0, 4), rel=1e-12)
    assert rep.flagged
    assert abs(rep.value - kernel_series([1.0, -1.0], [1.0, -1.0], 0.5, 30).value) <= rep.error_estimate


def test_series_symmetry():
    X, lam = [0.5, -0.1, 0.2], [0.9, -0.3, 0.4]
    a = kernel_series(X, lam, 1.25, 20)
    b = kernel_series(lam, X, 1.25, 20)
    assert abs(a.value - b.value) <= a.error_estimate + 1e-13


# -- restriction and the reduction formula ----------------------------------

def test_restrict_examples():
    lam = [Fraction(3), Fraction(1), Fraction(-2)]
    x1, x2, x3 = x(3)
    n1, n2 = x(2)
    total = sum(lam)
    assert restrict_f_lambda(x1 + x2 + x3, lam) == SparsePolynomial.constant(2, total)
    assert restrict_f_lambda(x3, lam) == SparsePolynomial.constant(2, total) - n1 - n2
    assert restrict_f_lambda(x1, lam) == n1
    f = restrict_f_lambda(lambda Z: Z[..., 2] * 2.0, [3.0, 1.0, -2.0])
    assert f([0.5, 0.25]) == pytest.approx(2 * (2.0 - 0.75))


def test_reduction_constant_is_one():
    assert intertwine_reduction(SparsePolynomial.constant(3, 1), [1.0, 0.2, -0.9], 0.4) == pytest.approx(1.0, abs=1e-12)
    assert intertwine_reduction(lambda Z: np.ones(Z.shape[:-1]), [1.0, 0.2, -0.9], 0.4) == pytest.approx(1.0, abs=1e-12)


def test_reduction_rank_one_linear():
    lam = [1.1, -0.6]
    x1, _ = x(2)
    assert intertwine_reduction(x1, lam, 1.0) == pytest.approx((2 * lam[0] + lam[1]) / 3, abs=1e-12)


@pytest.mark.parametrize("k", [0.5, 1.0, 1.75])
def test_reduction_matches_linear_solve(k):
    lam = np.array([1.2, 0.1, -0.7])
    x1, x2, x3 = x(3)
    tbl = build_intertwine(3, k, 3)
    for f in (x1, x1 * x2, x3 ** 3 - x1 * x2 * x3):
        assert intertwine_reduction(f, lam, k, CFG32) == pytest.approx(
            float(apply_intertwine(tbl, f)(lam)), abs=1e-9)


def test_reduction_of_exponential_is_kernel():
    X, lam = np.array([0.5, -0.4, 0.3]), np.array([1.0, 0.1, -0.8])
    val = intertwine_reduction(lambda Z: np.exp(Z @ X), lam, 0.7, CFG32)
    assert val == pytest.approx(kernel_reduce(X, lam, 0.7, CFG32).value, abs=1e-12)


# -- univariate compositions ------------------------------------------------

@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_univariate_constant(j):
    assert xu_univariate(lambda s: np.ones_like(s), j, [2.0, 1.0, -0.5, -1.0], 0.6) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
def test_univariate_identity_rank_one(k):
    lam = [1.7, -0.3]
    ref = ((k + 1) * lam[0] + k * lam[1]) / (2 * k + 1)
    assert xu_univariate(lambda s: s, 0, lam, k) == pytest.approx(ref, rel=1e-12)


def test_univariate_exponential_is_kernel_xu():
    lam = [1.0, 0.2, -0.9]
    assert xu_univariate(lambda s: np.exp(-0.8 * s), 2, lam, 1.5) == pytest.approx(
        kernel_xu(-0.8, 2, lam, 1.5), rel=1e-13)


def test_univariate_matches_linear_solve():
    # F(lam) = lam_j^2 is polynomial, so V_k F comes from the table too
    lam = np.array([1.3, 0.4, -1.0])
    tbl = build_intertwine(3, Fraction(3, 4), 2)
    for j in range(3):
        ref = float(apply_intertwine(tbl, x(3)[j] ** 2)(lam))
        assert xu_univariate(lambda s: s ** 2, j, lam, 0.75) == pytest.approx(ref, rel=1e-12)
