"""The intertwining operator ``V_k`` on polynomials and the reductions built on it.

``V_k`` is determined degree by degree: on homogeneous polynomials of
degree ``m`` it is the unique linear map with ``T_j V_k p = V_k d_j p`` for
every ``j``, and it is the identity on constants. Each degree is a linear
system in the monomial basis whose right-hand side uses the map already
built for degree ``m - 1``.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from dunklkit.algebra import SparsePolynomial, all_permutations, divided_difference, is_exact
from dunklkit.dunkl import FunctionHandle, check_multiplicity
from dunklkit.errors import ArityMismatchError, IntertwineSolveError
from dunklkit.kernel import (
    DominantPoint,
    EvalReport,
    KernelConfig,
    _log_c_norm,
    _regular_product,
    c_norm,
    q_factor,
)
from dunklkit.quadrature import gauss_jacobi, simplex_rule

__all__ = [
    "IntertwineTable",
    "DEFAULT_MAX_DEGREE",
    "monomial_basis",
    "build_intertwine",
    "apply_intertwine",
    "intertwine_residual",
    "kernel_series",
    "series_tail_bound",
    "restrict_f_lambda",
    "intertwine_reduction",
    "xu_univariate",
]

DEFAULT_MAX_DEGREE = {1: 30, 2: 30, 3: 20, 4: 12}


@functools.lru_cache(maxsize=None)
def monomial_basis(arity: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    """Exponent tuples of total ``degree`` in descending lexicographic order."""
    if arity == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in monomial_basis(arity - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _index(arity, degree):
    return {e: i for i, e in enumerate(monomial_basis(arity, degree))}


@functools.lru_cache(maxsize=None)
def _operator_matrices(arity: int, degree: int):
    """Integer matrices of ``d_j`` and of the reflection part of ``T_j`` from degree to degree - 1.

    ``T_j(k) = D[j] + k * R[j]`` on the monomial basis.
    """
    src = monomial_basis(arity, degree)
    dst = _index(arity, degree - 1)
    D = np.zeros((arity, len(dst), len(src)), dtype=np.int64)
    R = np.zeros((arity, len(dst), len(src)), dtype=np.int64)
    for col, exps in enumerate(src):
        p = SparsePolynomial.monomial(exps)
        for j in range(arity):
            for e, c in p.derivative(j).items():
                D[j, dst[e], col] += c
            for i in range(arity):
                if i == j:
                    continue
                for e, c in divided_difference(p, j, i).items():
                    R[j, dst[e], col] += c
    return D, R


@dataclass(frozen=True)
class IntertwineTable:
    """``V_k`` restricted to each degree ``m <= max_degree`` as a square matrix.

    Column ``a`` of ``maps[m]`` holds the coefficients of ``V_k(x^a)`` in
    ``monomial_basis(arity, m)``. Exact tables hold lists of Fractions,
    float tables hold ndarrays.
    """

    arity: int
    k: object
    max_degree: int
    exact: bool
    maps: tuple = field(repr=False)
    residuals: tuple = field(repr=False, default=())

    def matrix(self, m: int):
        if m > self.max_degree:
            raise ValueError(f"degree {m} exceeds table maximum {self.max_degree}")
        return self.maps[m]

    def float_maps(self) -> List[np.ndarray]:
        if not self.exact:
            return list(self.maps)
        return [np.array([[float(v) for v in row] for row in M]) for M in self.maps]


def _solve_exact(A, B):
    """Solve the consistent system ``A X = B`` over the rationals (A may be tall)."""
    rows, cols = len(A), len(A[0])
    nrhs = len(B[0])
    M = [list(A[r]) + list(B[r]) for r in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                Mi, Mr = M[i], M[r]
                M[i] = [a - f * b for a, b in zip(Mi, Mr)]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if len(pivots) != cols:
        raise IntertwineSolveError("singular system", None, None)
    for i in range(r, rows):
        if any(v != 0 for v in M[i][cols:]):
            raise IntertwineSolveError("inconsistent system", None, None)
    X = [[Fraction(0)] * nrhs for _ in range(cols)]
    for i, c in enumerate(pivots):
        X[c] = M[i][cols:]
    return X


def build_intertwine(arity: int, k, max_degree: int | None = None, exact: bool | None = None) -> IntertwineTable:
    """Solve for ``V_k`` on all degrees up to ``max_degree``.

    Exact Gaussian elimination over the rationals when ``k`` is an int or
    Fraction (unless ``exact=False``); otherwise least squares on the
    stacked system with a relative residual check of ``1e-12``.
    """
    k = check_multiplicity(k)
    if max_degree is None:
        max_degree = DEFAULT_MAX_DEGREE.get(arity, 12)
    if exact is None:
        exact = is_exact(k)
    if exact:
        # plain ints would turn into floats under division in the elimination
        k = Fraction(k)
    return _build_cached(arity, k, max_degree, exact)


@functools.lru_cache(maxsize=64)
def _build_cached(arity, k, max_degree, exact):
    if exact:
        maps = [[[Fraction(1)]]]
    else:
        maps = [np.ones((1, 1))]
    residuals = [0.0]
    kf = float(k)
    for m in range(1, max_degree + 1):
        D, R = _operator_matrices(arity, m)
        prev = maps[m - 1]
        if exact:
            A, Bm = [], []
            for j in range(arity):
                Tj = [[int(D[j, r, c]) + k * int(R[j, r, c]) for c in range(D.shape[2])]
                      for r in range(D.shape[1])]
                # right side: V_{m-1} applied to d_j of each monomial
                rhs = [[sum((prev[r][s] * int(D[j, s, c]) for s in range(D.shape[1]) if D[j, s, c]),
                            Fraction(0)) for c in range(D.shape[2])] for r in range(D.shape[1])]
                A.extend(Tj)
                Bm.extend(rhs)
            try:
                Vm = _solve_exact(A, Bm)
            except IntertwineSolveError as exc:
                raise IntertwineSolveError(f"{exc} at k={k}, degree={m}", k, m) from exc
            maps.append(Vm)
            residuals.append(0.0)
        else:
            A = np.concatenate([D[j] + kf * R[j] for j in range(arity)], axis=0).astype(float)
            Bm = np.concatenate([prev @ D[j] for j in range(arity)], axis=0)
            Vm, _, rank, _ = np.linalg.lstsq(A, Bm, rcond=None)
            if rank < A.shape[1]:
                raise IntertwineSolveError(
                    f"rank-deficient system at k={k}, degree={m}", k, m)
            res = np.linalg.norm(A @ Vm - Bm) / max(np.linalg.norm(Bm), 1.0)
            if res > 1e-12:
                raise IntertwineSolveError(
                    f"residual {res:.3g} above 1e-12 at k={k}, degree={m}", k, m)
            maps.append(Vm)
            residuals.append(float(res))
    return IntertwineTable(arity, k, max_degree, exact, tuple(maps), tuple(residuals))


def _to_vector(poly_part: SparsePolynomial, arity, m, exact):
    idx = _index(arity, m)
    if exact:
        v = [Fraction(0)] * len(idx)
    else:
        v = np.zeros(len(idx))
    for e, c in poly_part.items():
        v[idx[e]] = c if exact else float(c)
    return v


def apply_intertwine(tbl: IntertwineTable, p: SparsePolynomial) -> SparsePolynomial:
    """``V_k p``, applied separately to each homogeneous component."""
    if p.arity != tbl.arity:
        raise ArityMismatchError(f"polynomial arity {p.arity} vs table arity {tbl.arity}")
    exact = tbl.exact and p.mode == "exact"
    out = SparsePolynomial.zero(p.arity)
    for m, part in p.homogeneous_components().items():
        if m > tbl.max_degree:
            raise ValueError(f"degree {m} exceeds table maximum {tbl.max_degree}")
        basis = monomial_basis(p.arity, m)
        if exact:
            M = tbl.maps[m]
            v = _to_vector(part, p.arity, m, True)
            coeffs = [sum((M[r][c] * v[c] for c in range(len(v)) if v[c]), Fraction(0))
                      for r in range(len(basis))]
        else:
            M = tbl.maps[m] if not tbl.exact else tbl.float_maps()[m]
            coeffs = M @ _to_vector(part, p.arity, m, False)
        out = out + SparsePolynomial(p.arity, {basis[r]: c for r, c in enumerate(coeffs)})
    return out


def intertwine_residual(tbl: IntertwineTable, p: SparsePolynomial, j: int):
    """``T_j(V_k p) - V_k(d_j p)`` as a polynomial (zero when the table is right)."""
    from dunklkit.dunkl import dunkl_apply_poly
    return dunkl_apply_poly(apply_intertwine(tbl, p), j, tbl.k) - apply_intertwine(tbl, p.derivative(j))


# ---------------------------------------------------------------------------
# series oracle for the kernel
# ---------------------------------------------------------------------------

def series_tail_bound(bound_arg: float, order: int) -> float:
    """``sum_{m > order} B^m / m!``."""
    B = abs(bound_arg)
    term = B ** order / math.factorial(order) if order < 170 else 0.0
    total = 0.0
    m = order
    while True:
        m += 1
        term = term * B / m
        total += term
        if term <= 1e-17 * max(total, 1e-300) or m > order + 2000:
            break
    return total


def kernel_series(X, lam, k, M: int | None = None, tbl: IntertwineTable | None = None,
                  tolerance: float = 1e-8) -> EvalReport:
    """Truncated series ``sum_{m <= M} V_k(<X, .>^m)(lam) / m!``.

    The reported error estimate is the tail bound with
    ``B = |X|_2 |lam|_2``; it is flagged when above ``tolerance``.
    """
    t0 = time.perf_counter()
    X = np.asarray(X, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if X.shape != lam.shape or X.ndim != 1:
        raise ArityMismatchError("X and lambda must be vectors of equal length")
    arity = X.size
    if M is None:
        M = tbl.max_degree if tbl is not None else DEFAULT_MAX_DEGREE.get(arity, 12)
    if tbl is None:
        tbl = build_intertwine(arity, float(k), M, exact=False)
    if M > tbl.max_degree:
        raise ValueError(f"series order {M} exceeds table maximum {tbl.max_degree}")
    maps = tbl.float_maps()
    terms = []
    ncoef = 0
    for m in range(M + 1):
        basis = monomial_basis(arity, m)
        E = np.array(basis)
        lf = np.array([math.lgamma(e + 1) for e in range(m + 1)])
        # X^a / a!  and  lam^a
        xa = np.prod(X[None, :] ** E, axis=1) / np.exp(lf[E].sum(axis=1))
        la = np.prod(lam[None, :] ** E, axis=1)
        terms.append(float(la @ (maps[m] @ xa)))
        ncoef += len(basis)
    value = math.fsum(terms)
    bound = series_tail_bound(float(np.linalg.norm(X) * np.linalg.norm(lam)), M)
    return EvalReport(value=value, method="series", error_estimate=bound,
                      integrand_evals=ncoef, elapsed=time.perf_counter() - t0,
                      flagged=bound > tolerance, nodes_per_level=())


# ---------------------------------------------------------------------------
# reduction formulas for V_k
# ---------------------------------------------------------------------------

def restrict_f_lambda(f, lam):
    """``f_lam(nu) = f(nu_1, ..., nu_n, sum(lam) - sum(nu))``.

    Polynomials map to polynomials (float coefficients unless everything is
    exact); callables map to a ``FunctionHandle`` of arity ``n``.
    """
    lam = list(lam)
    total = sum(lam)
    n = len(lam) - 1
    if isinstance(f, SparsePolynomial):
        if f.arity != n + 1:
            raise ArityMismatchError(f"polynomial arity {f.arity} vs {n + 1} coordinates")
        vars_ = SparsePolynomial.variables(n)
        last = SparsePolynomial.constant(n, total) - sum(vars_, SparsePolynomial.zero(n))
        out = SparsePolynomial.zero(n)
        powers = {}
        for exps, c in f.items():
            term = SparsePolynomial.constant(n, c)
            for i in range(n):
                if exps[i]:
                    term = term * vars_[i] ** exps[i]
            e = exps[n]
            if e:
                if e not in powers:
                    powers[e] = last ** e
                term = term * powers[e]
            out = out + term
        return out
    fn = f.fn if isinstance(f, FunctionHandle) else f

    def restricted(nu):
        nu = np.asarray(nu, dtype=float)
        tail = total - nu.sum(axis=-1, keepdims=True)
        return fn(np.concatenate([nu, tail], axis=-1))

    return FunctionHandle(restricted, n)


def _box(lam, N, k):
    # interior tensor grid with the endpoint factors of W_k in the weights
    n = lam.shape[-1] - 1
    rule = gauss_jacobi(N, k - 1, k - 1)
    half = 0.5 * (lam[..., :-1] - lam[..., 1:])
    mid = 0.5 * (lam[..., :-1] + lam[..., 1:])
    mesh = np.stack(np.meshgrid(*([rule.nodes] * n), indexing="ij"), axis=-1).reshape(-1, n)
    wts = functools.reduce(np.multiply.outer, [rule.weights] * n).reshape(-1)
    nu = mid[..., None, :] + half[..., None, :] * mesh
    log_jac = ((2 * k - 1) * np.log(half)).sum(axis=-1)
    return nu, wts, log_jac


def _reduction_prefactor(lam, k):
    n = lam.shape[-1] - 1
    logpi = 0.0
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            logpi = logpi + np.log(lam[..., i] - lam[..., j])
    return _log_c_norm(n, k) - 2 * k * logpi


def _vk_rows(fn, lam, k, nodes):
    """``V_k f`` at each row of dominant ``lam`` (shape (B, m)); ``fn`` is pointwise-vectorized."""
    B, m = lam.shape
    if m == 1:
        return fn(lam)
    n = m - 1
    nu, wts, log_jac = _box(lam, nodes[0], k)                      # nu (B, G, n)
    G = nu.shape[1]
    weight = wts[None, :] * np.exp(log_jac)[:, None]
    if n > 1:
        weight = weight * _regular_product(lam[:, None, :], nu) ** (k - 1)
    total = lam.sum(axis=-1)
    integrand = np.zeros((B, G))
    for w in all_permutations(n):
        img = np.array(w.images)

        def composed(y, img=img):
            # f_lam(y[img]) with the row's total sum; y has shape (B*G, ..., n)
            y = np.asarray(y)
            yb = y.reshape((B, G) + y.shape[1:])
            s = total.reshape((B, 1) + (1,) * (yb.ndim - 3))
            z = np.concatenate([yb[..., img], (s - yb.sum(axis=-1))[..., None]], axis=-1)
            return np.asarray(fn(z)).reshape(y.shape[:-1])

        inner = _vk_rows(composed, nu.reshape(B * G, n), k, nodes[1:]).reshape(B, G)
        integrand += w.sign * q_factor(lam[:, None, :], nu[..., img]) * inner
    return np.exp(_reduction_prefactor(lam, k)) * np.sum(weight * integrand, axis=1)


def intertwine_reduction(f, lam, k, cfg: KernelConfig | None = None) -> float:
    """``V_k f(lam)`` through the rank-reduction formula.

    ``f`` is a ``SparsePolynomial`` (the inner ``V_k`` of one rank lower is
    then applied exactly through an intertwining table) or a pointwise
    callable on arrays with last axis of length ``n + 1`` (the inner
    operator is then evaluated by the same reduction, recursively).
    """
    k = float(check_multiplicity(k))
    cfg = cfg or KernelConfig()
    lam = DominantPoint.of(lam, cfg.min_gap)
    n = lam.n
    lam_arr = lam.array()
    nodes = cfg.nodes_for(max(n, 1))
    if n == 0:
        return float(f(lam_arr)) if not isinstance(f, SparsePolynomial) else float(f(lam_arr))
    if isinstance(f, SparsePolynomial):
        g = restrict_f_lambda(f, lam_arr.tolist())
        if n > 1:
            tbl = build_intertwine(n, k, max(g.degree, 0), exact=False)
            g = apply_intertwine(tbl, g)
        nu, wts, log_jac = _box(lam_arr[None, :], nodes[0], k)
        nu = nu[0]
        weight = wts * math.exp(float(log_jac[0]))
        if n > 1:
            weight = weight * _regular_product(lam_arr[None, :], nu) ** (k - 1)
        integrand = np.zeros(nu.shape[0])
        for w in all_permutations(n):
            img = list(w.images)
            integrand += w.sign * q_factor(lam_arr[None, :], nu[:, img]) * g(nu[:, img])
        pref = math.exp(float(_reduction_prefactor(lam_arr, k)))
        return pref * math.fsum(weight * integrand)
    fn = f.fn if isinstance(f, FunctionHandle) else f
    return float(_vk_rows(fn, lam_arr[None, :], k, nodes)[0])


def xu_univariate(f, j: int, lam, k, cfg: KernelConfig | None = None) -> float:
    """``V_k(F)(lam)`` for ``F(lam) = f(lam_j)`` (``j`` 0-based) as a simplex integral.

    ``c_{n,k} int f(<lam, t>) t_j (prod t)^(k-1) dt``.
    """
    k = float(check_multiplicity(k))
    cfg = cfg or KernelConfig()
    lam = np.asarray(lam, dtype=float)
    n = lam.size - 1
    if n < 1:
        return float(f(lam[0]))
    if not 0 <= j <= n:
        raise ArityMismatchError(f"index {j} out of range for {n + 1} coordinates")
    N = max(cfg.nodes_for(n)[0], 16)
    rule = simplex_rule(n, k, N)
    t = rule.points
    vals = np.asarray(f(t @ lam), dtype=float) * t[:, j]
    return c_norm(n, k) * math.fsum(rule.weights * vals)
