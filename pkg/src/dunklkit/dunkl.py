"""Type-A Dunkl operators, exactly on polynomials and numerically on functions.

For multiplicity ``k`` and coordinate ``j`` (0-based),

    T_j f(x) = d f / d x_j + k * sum_{i != j} (f(x) - f((i j) x)) / (x_j - x_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Callable

import numpy as np

from dunklkit.algebra import SparsePolynomial, divided_difference
from dunklkit.errors import ArityMismatchError

__all__ = [
    "Multiplicity",
    "FunctionHandle",
    "check_multiplicity",
    "dunkl_apply_poly",
    "dunkl_apply_fn",
    "check_commutativity",
]

Multiplicity = Number


def check_multiplicity(k) -> Number:
    """Validate ``k > 0`` and return it unchanged (int/Fraction stay exact)."""
    if isinstance(k, str):
        k = Fraction(k)
    if not k > 0:
        raise ValueError(f"multiplicity must be positive, got {k}")
    return k


@dataclass(frozen=True)
class FunctionHandle:
    """A callable on points of a declared arity.

    ``fn`` receives a float array whose last axis holds the coordinates and
    must return an array of the leading shape (or a float for a 1-D point).
    """

    fn: Callable
    arity: int

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.arity:
            raise ArityMismatchError(f"expected {self.arity} coordinates, got {X.shape[-1]}")
        return self.fn(X)


def dunkl_apply_poly(p: SparsePolynomial, j: int, k) -> SparsePolynomial:
    """Apply ``T_j(k)`` to a polynomial; exact when ``p`` and ``k`` are exact."""
    if not 0 <= j < p.arity:
        raise ArityMismatchError(f"index {j} out of range for arity {p.arity}")
    out = p.derivative(j)
    for i in range(p.arity):
        if i != j:
            out = out + divided_difference(p, j, i).scale(k)
    return out


def _as_handle(f, arity):
    if isinstance(f, FunctionHandle):
        return f
    return FunctionHandle(f, arity)


def dunkl_apply_fn(f, j: int, k, X, h: float = 1e-5, richardson: bool = True) -> float:
    """Numerical ``T_j(k) f(X)`` for a black-box function.

    The partial derivative uses central differences (optionally one
    Richardson step, error O(h^4)); reflection terms use exact re-evaluation
    of ``f`` at the swapped points.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[-1]
    if not 0 <= j < m:
        raise ArityMismatchError(f"index {j} out of range for arity {m}")
    if h <= 0:
        raise ValueError("step h must be positive")
    gaps = [abs(X[a] - X[b]) for a in range(m) for b in range(a + 1, m)]
    if gaps and min(gaps) < 10 * h:
        raise ValueError(
            f"coordinate gap {min(gaps):.3g} below 10*h = {10 * h:.3g}; reflection terms unstable")
    f = _as_handle(f, m)

    def central(step):
        e = np.zeros(m)
        e[j] = step
        return (float(f(X + e)) - float(f(X - e))) / (2 * step)

    deriv = central(h)
    if richardson:
        deriv = (4.0 * central(h / 2) - deriv) / 3.0

    fx = float(f(X))
    refl = 0.0
    for i in range(m):
        if i == j:
            continue
        Xs = X.copy()
        Xs[i], Xs[j] = X[j], X[i]
        refl += (fx - float(f(Xs))) / (X[j] - X[i])
    return deriv + float(k) * refl


def check_commutativity(p: SparsePolynomial, i: int, j: int, k) -> bool:
    """Exactly test ``T_i T_j p == T_j T_i p``."""
    if i == j:
        raise ValueError("commutativity check needs i != j")
    lhs = dunkl_apply_poly(dunkl_apply_poly(p, j, k), i, k)
    rhs = dunkl_apply_poly(dunkl_apply_poly(p, i, k), j, k)
    return lhs == rhs
