from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklkit.algebra import (
    Permutation,
    SparsePolynomial,
    all_permutations,
    divided_difference,
    eval_poly,
    permute_poly,
    pi_product,
    poly_arith,
)
from dunklkit.errors import ArityMismatchError

x = SparsePolynomial.variables


# -- strategies -------------------------------------------------------------

@st.composite
def polynomials(draw, arity=None, max_degree=5, max_terms=6):
    m = arity if arity is not None else draw(st.integers(2, 4))
    nterms = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(nterms):
        e = tuple(draw(st.lists(st.integers(0, max_degree), min_size=m, max_size=m)))
        if sum(e) > max_degree:
            continue
        terms[e] = Fraction(draw(st.integers(-20, 20)), draw(st.integers(1, 6)))
    return SparsePolynomial(m, terms)


@st.composite
def permutations_of(draw, m):
    return Permutation(draw(st.permutations(list(range(m)))))


# -- poly_arith -------------------------------------------------------------

def test_add_cancels():
    x1, x2 = x(2)
    assert (x1 + x2) + (x1 - x2) == x1.scale(2)
    assert poly_arith(x1 + x2, x1 - x2, "add") == x1.scale(2)


def test_difference_of_squares():
    x1, x2 = x(2)
    assert poly_arith(x1 - x2, x1 + x2, "mul") == x1 ** 2 - x2 ** 2


def test_scale_by_zero_normalizes():
    x1, x2 = x(2)
    z = poly_arith(x1 * x2, 0, "scale")
    assert z.terms == {}
    assert z == SparsePolynomial.zero(2)


def test_no_stored_zeros():
    p = SparsePolynomial(2, {(1, 0): 0, (0, 1): Fraction(3, 2)})
    assert (1, 0) not in p.terms


def test_arity_mismatch():
    with pytest.raises(ArityMismatchError):
        x(2)[0] + x(3)[0]
    with pytest.raises(ArityMismatchError):
        SparsePolynomial(2, {(1, 0, 0): 1})


def test_exact_mode_is_preserved():
    p = x(2)[0].scale(Fraction(1, 3))
    assert p.mode == "exact"
    assert (p * p).coefficient((2, 0)) == Fraction(1, 9)
    assert p.to_float().mode == "float"


# -- permutations -----------------------------------------------------------

def test_transposition_relabels_variable():
    x1, x2 = x(2)
    assert permute_poly(x1, Permutation.transposition(2, 0, 1)) == x2


def test_symmetric_polynomial_is_invariant():
    s = sum(x(3), SparsePolynomial.zero(3))
    for w in all_permutations(3):
        assert permute_poly(s, w) == s


def test_permute_then_evaluate_matches_inverse_point():
    x1, x2, _ = x(3)
    p = x1 ** 2 * x2
    w = Permutation([1, 2, 0])  # 3-cycle
    X = [1, 2, 3]
    assert permute_poly(p, w)(X) == p(w.inverse().act(X))


def _inversion_parity(images):
    inv = sum(1 for a, b in itertools.combinations(images, 2) if a > b)
    return -1 if inv % 2 else 1


@pytest.mark.parametrize("w", all_permutations(4), ids=lambda w: str(w.images))
def test_sign_matches_bubble_sort_parity(w):
    assert w.sign == _inversion_parity(w.images)


def test_composition_matches_action():
    X = [10, 20, 30, 40]
    for a in all_permutations(4)[::5]:
        for b in all_permutations(4)[::7]:
            assert (a * b).act(X) == a.act(b.act(X))


@given(polynomials(arity=3), permutations_of(3), permutations_of(3))
@settings(max_examples=40, deadline=None)
def test_permute_is_group_action(p, w1, w2):
    assert permute_poly(permute_poly(p, w1), w2) == permute_poly(p, w2 * w1)


def test_invalid_permutation():
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])


# -- divided differences ----------------------------------------------------

def test_divided_difference_examples():
    x1, x2 = x(2)
    assert divided_difference(x1, 0, 1) == SparsePolynomial.constant(2, 1)
    assert divided_difference(x1 ** 2, 0, 1) == x1 + x2
    assert divided_difference(x1 * x2 + x1 + x2, 0, 1) == SparsePolynomial.zero(2)


def test_divided_difference_rejects_equal_indices():
    with pytest.raises(ValueError):
        divided_difference(x(2)[0], 1, 1)


@given(polynomials(), st.data())
@settings(max_examples=60, deadline=None)
def test_divided_difference_multiplies_back(p, data):
    i, j = data.draw(st.permutations(list(range(p.arity))))[:2]
    xs = x(p.arity)
    q = divided_difference(p, i, j)
    assert (xs[i] - xs[j]) * q == p - p.swap(i, j)


def test_divided_difference_float_mode():
    x1, x2 = x(2)
    p = (x1 ** 3).scale(0.5) + x2
    q = divided_difference(p, 0, 1)
    X = np.array([0.7, -0.3])
    assert q(X) == pytest.approx((p(X) - p(X[::-1])) / (X[0] - X[1]), rel=1e-14)


# -- evaluation and pi ------------------------------------------------------

def test_eval_examples():
    x1, x2, x3 = x(3)
    assert eval_poly(x(2)[0] * x(2)[1], [2, 3]) == 6
    assert eval_poly(SparsePolynomial.zero(2), [5, 7]) == 0
    assert eval_poly((x1 - x2) * (x1 - x3) * (x2 - x3), [2, 1, 0]) == 2


def test_eval_batched():
    x1, x2 = x(2)
    p = x1 ** 2 - x2.scale(3)
    X = np.array([[1.0, 2.0], [0.5, -1.0], [2.0, 0.0]])
    np.testing.assert_allclose(p(X), X[:, 0] ** 2 - 3 * X[:, 1])


def test_eval_exact_rational():
    p = x(2)[0] * x(2)[1]
    assert eval_poly(p, [Fraction(1, 3), Fraction(3, 7)]) == Fraction(1, 7)


def test_eval_arity_mismatch():
    with pytest.raises(ArityMismatchError):
        eval_poly(x(2)[0], [1, 2, 3])


def test_pi_product_examples():
    assert pi_product([2, 1, 0]) == 2
    assert pi_product([1, 1, 0]) == 0
    assert pi_product([1, -1]) == 2


@given(st.lists(st.integers(-50, 50), min_size=2, max_size=5, unique=True), st.data())
def test_pi_product_alternates_under_transpositions(lam, data):
    i, j = sorted(data.draw(st.permutations(list(range(len(lam)))))[:2])
    w = Permutation.transposition(len(lam), i, j)
    assert pi_product(w.act(lam)) == w.sign * pi_product(lam) == -pi_product(lam)


def test_homogeneous_components():
    x1, x2 = x(2)
    p = x1 ** 2 + x1 * x2 + x2 + 3
    comps = p.homogeneous_components()
    assert sorted(comps) == [0, 1, 2]
    assert comps[2] == x1 ** 2 + x1 * x2
    assert all(c.is_homogeneous for c in comps.values())
