"""Gauss-Jacobi rules, tensor grids over interlacing boxes, and simplex rules.

The box grids absorb the endpoint singularities ``(a - v)^(k-1) (v - b)^(k-1)``
of the interlacing weight into the Jacobi weight, so integrands that are
smooth on the closed box converge spectrally for any ``k > 0``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "JacobiRule",
    "BoxGrid",
    "SimplexRule",
    "gauss_jacobi",
    "jacobi_mass",
    "box_grid",
    "simplex_rule",
    "dirichlet_moment",
]


@dataclass(frozen=True)
class JacobiRule:
    """Gauss rule for the weight ``(1-x)^alpha (1+x)^beta`` on ``[-1, 1]``."""

    N: int
    alpha: float
    beta: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def jacobi_mass(alpha: float, beta: float) -> float:
    """``int_{-1}^1 (1-x)^alpha (1+x)^beta dx = 2^(a+b+1) B(a+1, b+1)``."""
    return math.exp((alpha + beta + 1) * math.log(2.0) + math.lgamma(alpha + 1)
                    + math.lgamma(beta + 1) - math.lgamma(alpha + beta + 2))


def _jacobi_recurrence(N, alpha, beta):
    """Diagonal and off-diagonal of the Jacobi matrix for the orthonormal Jacobi polynomials."""
    a, b = alpha, beta
    n = np.arange(N, dtype=float)
    s = 2 * n + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = np.where(n == 0, (b - a) / (a + b + 2), (b * b - a * a) / (s * (s + 2)))
    off = np.empty(max(N - 1, 0))
    for i in range(1, N):
        if i == 1:
            # n = 1 formula with the (n + a + b) / (2n + a + b - 1) factor cancelled
            off[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
        else:
            si = 2 * i + a + b
            off[i - 1] = (4 * i * (i + a) * (i + b) * (i + a + b)
                          / (si * si * (si + 1) * (si - 1)))
    return diag, np.sqrt(off)


@functools.lru_cache(maxsize=256)
def gauss_jacobi(N: int, alpha: float, beta: float) -> JacobiRule:
    """Golub-Welsch construction of the ``N``-point Gauss-Jacobi rule.

    Exact for polynomials of degree ``<= 2N - 1`` against
    ``(1-x)^alpha (1+x)^beta``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    alpha, beta = float(alpha), float(beta)
    if alpha <= -1 or beta <= -1:
        raise ValueError("Jacobi exponents must exceed -1")
    diag, off = _jacobi_recurrence(N, alpha, beta)
    mu0 = jacobi_mass(alpha, beta)
    if N == 1:
        nodes = diag.copy()
        weights = np.array([mu0])
    else:
        try:
            nodes, vecs = eigh_tridiagonal(diag, off)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError(f"Golub-Welsch eigensolver failed for N={N}") from exc
        weights = mu0 * vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return JacobiRule(N, alpha, beta, nodes, weights)


@dataclass(frozen=True)
class BoxGrid:
    """Tensor rule over ``prod_i [lam_{i+1}, lam_i]``.

    ``weights`` include the Jacobi weights and the affine Jacobians, so
    ``sum(weights * g(nodes))`` approximates
    ``int g(v) prod_i ((lam_i - v_i)(v_i - lam_{i+1}))^(k-1) dv``.
    """

    lam: np.ndarray
    rules: tuple
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.rules)


def box_grid(lam: Sequence[float], nodes_per_dim, k=1.0,
             exponents: Sequence[tuple] | None = None) -> BoxGrid:
    """Tensor Gauss-Jacobi grid over the interlacing box of a dominant ``lam``.

    Parameters
    ----------
    lam : sequence of float
        Strictly decreasing point with ``n + 1`` coordinates.
    nodes_per_dim : int or sequence of int
        Node count per box dimension.
    k : float
        Multiplicity; both endpoints of every dimension get exponent ``k - 1``.
    exponents : sequence of (upper, lower) pairs, optional
        Overrides the exponents per dimension: ``upper`` applies to
        ``(lam_i - v_i)``, ``lower`` to ``(v_i - lam_{i+1})``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size - 1
    if n < 1:
        raise ValueError("box grid needs at least two coordinates")
    if np.any(np.diff(lam) >= 0):
        from dunklkit.errors import DegenerateLambdaError
        raise DegenerateLambdaError("lambda not strictly dominant")
    if np.isscalar(nodes_per_dim):
        nodes_per_dim = [int(nodes_per_dim)] * n
    if exponents is None:
        exponents = [(k - 1, k - 1)] * n
    rules, axes, wts = [], [], []
    for i in range(n):
        up, lo = exponents[i]
        # (1 - x) <-> distance to the upper endpoint lam_i
        rule = gauss_jacobi(int(nodes_per_dim[i]), float(up), float(lo))
        half = 0.5 * (lam[i] - lam[i + 1])
        mid = 0.5 * (lam[i] + lam[i + 1])
        rules.append(rule)
        axes.append(mid + half * rule.nodes)
        wts.append(rule.weights * half ** (up + lo + 1))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    wmesh = functools.reduce(np.multiply.outer, wts).reshape(-1)
    return BoxGrid(lam, tuple(rules), mesh, wmesh)


@dataclass(frozen=True)
class SimplexRule:
    """Rule on ``{t >= 0, sum t = 1}`` (``n + 1`` barycentric coordinates).

    ``sum(weights * g(points))`` approximates ``int g(t) (prod t)^(k-1) dt``
    with ``dt`` the Lebesgue measure on the first ``n`` coordinates.
    """

    n: int
    k: float
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def integrate(self, g) -> float:
        return float(np.dot(self.weights, g(self.points)))


@functools.lru_cache(maxsize=64)
def simplex_rule(n: int, k: float, N: int) -> SimplexRule:
    """Stick-breaking product rule, exact to total degree ``2N - 1``.

    ``t_1 = s_1``, ``t_l = s_l prod_{i<l} (1 - s_i)``, ``t_{n+1} = prod (1 - s_i)``;
    level ``l`` carries the weight ``s^(k-1) (1-s)^((k-1)(n+1-l) + n - l)``.
    """
    if n < 1:
        raise ValueError("simplex dimension must be at least 1")
    k = float(k)
    if k <= 0:
        raise ValueError("k must be positive")
    svals, swts = [], []
    for level in range(1, n + 1):
        b_exp = (k - 1) * (n + 1 - level) + (n - level)
        rule = gauss_jacobi(N, b_exp, k - 1)
        svals.append(0.5 * (1 + rule.nodes))
        swts.append(rule.weights / 2.0 ** (k + b_exp))
    pts = []
    for combo in itertools.product(*svals):
        t = np.empty(n + 1)
        rest = 1.0
        for l, s in enumerate(combo):
            t[l] = rest * s
            rest *= 1.0 - s
        t[n] = rest
        pts.append(t)
    points = np.array(pts)
    # renormalize rounding so that each point lies on the simplex
    points /= points.sum(axis=1, keepdims=True)
    weights = functools.reduce(np.multiply.outer, swts).reshape(-1)
    points.setflags(write=False)
    weights.setflags(write=False)
    return SimplexRule(n, k, points, weights)


def dirichlet_moment(params: Sequence[float], powers: Sequence[int]) -> float:
    """``int t^powers prod t^(params-1) dt`` over the simplex, in closed form."""
    params = [float(a) for a in params]
    lg = sum(math.lgamma(a + p) for a, p in zip(params, powers))
    lg -= math.lgamma(sum(params) + sum(powers))
    return math.exp(lg)
