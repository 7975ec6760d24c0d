from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklkit.algebra import Permutation, SparsePolynomial, all_permutations, permute_poly
from dunklkit.dunkl import (
    FunctionHandle,
    check_commutativity,
    check_multiplicity,
    dunkl_apply_fn,
    dunkl_apply_poly,
)
from dunklkit.errors import ArityMismatchError

from test_algebra import polynomials

x = SparsePolynomial.variables


def test_constant_is_annihilated():
    assert dunkl_apply_poly(SparsePolynomial.constant(3, 7), 1, Fraction(1, 2)) == SparsePolynomial.zero(3)


def test_linear_rank_one():
    # d/dx1 gives 1, the reflection term k (x1 - x2)/(x1 - x2) gives k
    k = Fraction(3, 4)
    assert dunkl_apply_poly(x(2)[0], 0, k) == SparsePolynomial.constant(2, 1 + k)


def test_linear_rank_two_cross_term():
    k = Fraction(5, 2)
    assert dunkl_apply_poly(x(3)[0], 1, k) == SparsePolynomial.constant(3, -k)


@given(polynomials(arity=3, max_degree=4))
@settings(max_examples=30, deadline=None)
def test_homogeneous_degree_drops_by_one(p):
    for m, part in p.homogeneous_components().items():
        if m == 0:
            continue
        out = dunkl_apply_poly(part, 0, Fraction(2, 3))
        assert out == SparsePolynomial.zero(3) or (out.is_homogeneous and out.degree == m - 1)


def test_index_out_of_range():
    with pytest.raises(ArityMismatchError):
        dunkl_apply_poly(x(2)[0], 2, 1)


@pytest.mark.parametrize("k", [0, -1, "-1/2"])
def test_multiplicity_must_be_positive(k):
    with pytest.raises(ValueError):
        check_multiplicity(k)


def test_multiplicity_string_is_exact():
    assert check_multiplicity("5/2") == Fraction(5, 2)


# -- commutativity ----------------------------------------------------------

@given(polynomials(arity=3, max_degree=3))
@settings(max_examples=25, deadline=None)
def test_commutativity_arity3(p):
    k = Fraction(2, 3)
    assert all(check_commutativity(p, i, j, k) for i in range(3) for j in range(i + 1, 3))


def test_commutativity_example_arity4():
    x1, x2, _, _ = x(4)
    assert check_commutativity(x1 ** 2 * x2, 0, 2, Fraction(1, 2))


def test_commutativity_rejects_equal_indices():
    with pytest.raises(ValueError):
        check_commutativity(x(2)[0], 1, 1, 1)


# -- structural identities --------------------------------------------------

@given(polynomials(max_degree=5), st.fractions(min_value=Fraction(1, 10), max_value=5))
@settings(max_examples=40, deadline=None)
def test_sum_of_dunkl_operators_is_sum_of_partials(p, k):
    lhs = sum((dunkl_apply_poly(p, j, k) for j in range(p.arity)), SparsePolynomial.zero(p.arity))
    rhs = sum((p.derivative(j) for j in range(p.arity)), SparsePolynomial.zero(p.arity))
    assert lhs == rhs


@given(polynomials(arity=3, max_degree=4), st.sampled_from([(0, 1), (0, 2), (1, 2)]))
@settings(max_examples=25, deadline=None)
def test_equivariance_transpositions(p, ij):
    w = Permutation.transposition(3, *ij)
    k = Fraction(3, 2)
    for j in range(3):
        lhs = permute_poly(dunkl_apply_poly(permute_poly(p, w.inverse()), j, k), w)
        assert lhs == dunkl_apply_poly(p, w(j), k)


def test_equivariance_general_permutations():
    # w e_j = e_{w^{-1}(j)} under (w X)_i = X_{w(i)}
    x1, x2, x3 = x(3)
    p = x1 ** 2 * x2 + x3 * x1 + x2 ** 3
    k = Fraction(2, 3)
    for w in all_permutations(3):
        for j in range(3):
            lhs = permute_poly(dunkl_apply_poly(permute_poly(p, w.inverse()), j, k), w)
            assert lhs == dunkl_apply_poly(p, w.inverse()(j), k)


# -- numerical operator -----------------------------------------------------

def test_fn_constant():
    assert abs(dunkl_apply_fn(lambda X: 3.0, 0, 0.5, [1.0, 0.0, -1.0])) < 1e-12


def test_fn_matches_exact_linear():
    val = dunkl_apply_fn(lambda X: X[..., 0], 0, 0.5, [1.0, 0.0], h=1e-5)
    assert val == pytest.approx(1.5, abs=1e-9)


@pytest.mark.parametrize("richardson", [False, True])
def test_fn_matches_exact_polynomial(richardson):
    x1, x2, x3 = x(3)
    p = (x1 ** 3 * x2 - x3 ** 2 * x1 + x2).to_float()
    X = np.array([0.9, -0.2, 0.4])
    k = 0.75
    for j in range(3):
        exact = float(dunkl_apply_poly(p, j, k)(X))
        approx = dunkl_apply_fn(p, j, k, X, h=1e-4, richardson=richardson)
        assert approx == pytest.approx(exact, abs=1e-6 if not richardson else 1e-9)


def test_fn_refuses_close_coordinates():
    with pytest.raises(ValueError, match="gap"):
        dunkl_apply_fn(lambda X: X.sum(), 0, 1.0, [1.0, 1.0 + 5e-5], h=1e-5)


def test_function_handle_checks_arity():
    f = FunctionHandle(lambda X: X.sum(axis=-1), 2)
    assert f([1.0, 2.0]) == 3.0
    with pytest.raises(ArityMismatchError):
        f([1.0, 2.0, 3.0])
