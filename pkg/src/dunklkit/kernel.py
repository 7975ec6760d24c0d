"""Dunkl kernel of type A by recursive reduction over interlacing boxes.

The rank-n kernel ``E_k(X, lam)`` (``X, lam`` in ``R^{n+1}``, ``lam``
strictly decreasing) is an alternating sum over ``S_n`` of rank-(n-1)
kernels integrated over the box ``prod_i [lam_{i+1}, lam_i]``; rank 0 is
``exp(x * lam)``. The evaluator below is vectorized over batches of
``(X, lam)`` rows so that every recursion level is a handful of array
operations.

Structural helpers (``q_factor``, ``interlace_product``, ...) are written
against ring operations only, so they accept floats, Fractions,
``SparsePolynomial`` variables, or batched ndarrays (last axis =
coordinates).
"""

from __future__ import annotations

import functools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from dunklkit.algebra import Permutation, all_permutations, coords, pi_product
from dunklkit.dunkl import check_multiplicity
from dunklkit.errors import (
    ArityMismatchError,
    CostGuardError,
    DegenerateLambdaError,
    RecursionDepthError,
)
from dunklkit.quadrature import gauss_jacobi, simplex_rule

__all__ = [
    "DominantPoint",
    "KernelConfig",
    "EvalReport",
    "DEFAULT_NODES",
    "c_norm",
    "interlace_product",
    "q_factor",
    "q_factor_pairs",
    "w_weight",
    "w_weight_squared",
    "w_weight_regular",
    "alternating_q_sum",
    "alternating_q_closed",
    "kernel_reduce",
    "kernel_compact",
    "kernel_a1_closed",
    "kernel_xu",
    "kernel_symmetrized",
    "kernel_unsorted",
    "estimate_evals",
    "change_of_vars_t",
    "jacobian_t",
    "negativity_witness",
]

DEFAULT_NODES = {1: (32,), 2: (32, 16), 3: (24, 16, 12), 4: (16, 12, 10, 8)}
MIN_NODES = 8

# rows handed to the next recursion level per chunk; bounds peak memory
_ROW_LIMIT = 1 << 17
# outer nodes per work unit; fixed so results do not depend on thread count
_BLOCK = 256


# ---------------------------------------------------------------------------
# configuration and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominantPoint:
    """A point with strictly decreasing coordinates and gaps >= ``min_gap``.

    ``min_gap`` defaults to ``1e-6 * max|lam_i|``.
    """

    coords: Tuple[float, ...]
    min_gap: Optional[float] = None

    def __post_init__(self):
        c = tuple(self.coords)
        object.__setattr__(self, "coords", c)
        if len(c) < 1:
            raise DegenerateLambdaError("empty point")
        if not all(math.isfinite(float(v)) for v in c):
            raise DegenerateLambdaError("lambda has non-finite entries")
        gap = self.min_gap
        if gap is None:
            gap = 1e-6 * max((abs(float(v)) for v in c), default=0.0)
        for a, b in zip(c, c[1:]):
            if not a > b:
                raise DegenerateLambdaError("lambda not strictly dominant")
            if float(a) - float(b) < gap:
                raise DegenerateLambdaError(
                    f"lambda gap {float(a) - float(b):.3g} below minimum {gap:.3g}")

    @classmethod
    def of(cls, lam, min_gap=None) -> "DominantPoint":
        if isinstance(lam, DominantPoint):
            return lam
        return cls(tuple(lam), min_gap)

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.coords])


@dataclass(frozen=True)
class KernelConfig:
    """Evaluation settings shared by all kernel methods.

    ``nodes_per_level[0]`` is the node count per box dimension at the top
    level of the recursion, ``nodes_per_level[1]`` one level down, and so
    on. Missing levels are filled with ``max(8, ceil(N/2))``.
    """

    nodes_per_level: Optional[Tuple[int, ...]] = None
    series_order: Optional[int] = None
    min_gap: Optional[float] = None
    tolerance: float = 1e-8
    mode: str = "reduce"
    parallel_width: int = 1
    error_estimate: bool = True
    fast_path: bool = True
    shift: bool = True
    max_rank: int = 3
    max_evals: float = 2e10

    def __post_init__(self):
        if self.nodes_per_level is not None:
            nodes = (self.nodes_per_level,) if isinstance(self.nodes_per_level, int) \
                else tuple(int(v) for v in self.nodes_per_level)
            if not nodes or min(nodes) < MIN_NODES:
                raise ValueError(f"need at least {MIN_NODES} nodes per level, got {nodes}")
            object.__setattr__(self, "nodes_per_level", nodes)
        if self.min_gap is not None and self.min_gap <= 0:
            raise ValueError("min_gap must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.parallel_width < 1:
            raise ValueError("parallel_width must be at least 1")
        if self.mode not in ("reduce", "series", "xu", "a1_closed", "compact", "symmetrized"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def nodes_for(self, n: int) -> Tuple[int, ...]:
        if self.nodes_per_level is None:
            base = DEFAULT_NODES.get(n, DEFAULT_NODES[4])
        else:
            base = self.nodes_per_level
        out = list(base[:n])
        while len(out) < n:
            out.append(max(MIN_NODES, math.ceil(base[0] / 2)))
        return tuple(out)

    def replace(self, **changes) -> "KernelConfig":
        d = asdict(self)
        d.update(changes)
        return KernelConfig(**d)

    @classmethod
    def threads_from_env(cls, default: int = 1) -> int:
        raw = os.environ.get("DUNKLKIT_THREADS")
        return int(raw) if raw else default


@dataclass
class EvalReport:
    """Value of a kernel evaluation plus diagnostics (``elapsed`` in seconds)."""

    value: float
    method: str
    error_estimate: float
    integrand_evals: int
    elapsed: float
    flagged: bool = False
    nodes_per_level: Tuple[int, ...] = ()
    notes: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nodes_per_level"] = list(self.nodes_per_level)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        d = dict(d)
        d.pop("schema", None)
        d["nodes_per_level"] = tuple(d.get("nodes_per_level", ()))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps({"schema": 1, **self.to_dict()}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# structural factors
# ---------------------------------------------------------------------------

def c_norm(n: int, k) -> float:
    """``(n+1) Gamma((n+1)k) / Gamma(k)^(n+1)``, computed in log-Gamma space."""
    k = float(check_multiplicity(k))
    return math.exp(math.log(n + 1) + math.lgamma((n + 1) * k) - (n + 1) * math.lgamma(k))


def _log_c_norm(n, k):
    return math.log(n + 1) + math.lgamma((n + 1) * k) - (n + 1) * math.lgamma(k)


def interlace_product(lam, nu):
    """``prod_r [prod_{s>=r} (lam_r - nu_s) prod_{s<r} (nu_s - lam_r)]``.

    Every factor is non-negative when ``nu`` lies in the box of ``lam``.
    """
    L, V = coords(lam), coords(nu)
    n = len(V)
    if len(L) != n + 1:
        raise ArityMismatchError("lambda must have one more coordinate than nu")
    out = 1
    for r in range(n + 1):
        for s in range(r, n):
            out = (L[r] - V[s]) * out
        for s in range(r):
            out = (V[s] - L[r]) * out
    return out


def q_factor(lam, nu):
    """The cofactor ``Q(lam, nu)``: the interlacing product without the ``(lam_s - nu_s)`` factors."""
    L, V = coords(lam), coords(nu)
    n = len(V)
    if len(L) != n + 1:
        raise ArityMismatchError("lambda must have one more coordinate than nu")
    out = 1
    for r in range(n + 1):
        for s in range(r + 1, n):
            out = (L[r] - V[s]) * out
        for s in range(r):
            out = (V[s] - L[r]) * out
    return out


def q_factor_pairs(lam, nu):
    """``Q`` in its signed pair form ``(-1)^(n(n+1)/2) prod_{i != j} (lam_i - nu_j)``."""
    L, V = coords(lam), coords(nu)
    n = len(V)
    out = -1 if (n * (n + 1) // 2) % 2 else 1
    for j in range(n):
        for i in range(n + 1):
            if i != j:
                out = (L[i] - V[j]) * out
    return out


def _regular_product(lam, nu):
    # interlacing product without the two endpoint factors of each dimension
    L, V = coords(lam), coords(nu)
    n = len(V)
    out = 1
    for r in range(n + 1):
        for s in range(r + 1, n):
            out = (L[r] - V[s]) * out
        for s in range(r - 1):
            out = (V[s] - L[r]) * out
    return out


def _ring_power(base, e):
    if isinstance(e, (int, Fraction)) and not isinstance(e, bool) and e == int(e) and int(e) >= 0:
        return base ** int(e)
    return base ** float(e)


def w_weight(lam, nu, k):
    """Interlacing weight ``W_k = (interlacing product)^(k-1)``.

    Exact (a polynomial in the inputs) for integer ``k >= 1``.
    """
    return _ring_power(interlace_product(lam, nu), k - 1)


def w_weight_squared(lam, nu, k):
    """``(prod_{i,j} (lam_j - nu_i)^2)^((k-1)/2)``, defined for any ordering of ``nu``."""
    L, V = coords(lam), coords(nu)
    sq = 1
    for v in V:
        for lj in L:
            sq = (lj - v) ** 2 * sq
    return sq ** ((float(k) - 1) / 2)


def _inside_box(L, V):
    return all(L[i + 1] <= V[i] <= L[i] for i in range(len(V)))


def w_weight_regular(lam, nu, k):
    """``W_k`` with the factors ``(lam_i - nu_i)^(k-1) (nu_i - lam_{i+1})^(k-1)`` divided out.

    Those two factors per dimension are carried by the Gauss-Jacobi weight;
    what remains is smooth and positive on the closed box.
    """
    L, V = coords(lam), coords(nu)
    if not isinstance(V[0], np.ndarray) and not _inside_box(L, V):
        raise ValueError("nu outside the interlacing box of lambda")
    return _ring_power(_regular_product(lam, nu), k - 1)


def alternating_q_closed(lam, nu):
    """``prod_{i<j<=n} (lam_i - lam_j)(nu_i - nu_j) * prod_r (nu_r - lam_{n+1})``."""
    L, V = coords(lam), coords(nu)
    n = len(V)
    out = pi_product(L[:n]) * pi_product(V)
    for r in range(n):
        out = (V[r] - L[n]) * out
    return out


def alternating_q_sum(lam, nu, check: bool = True):
    """``sum_{w in S_n} sign(w) Q(lam, w nu)``.

    With exact inputs the closed product form is computed as well and the
    two are asserted equal.
    """
    V = coords(nu)
    total = 0
    for w in all_permutations(len(V)):
        total = w.sign * q_factor(lam, w.act(V)) + total
    if check and _all_exact(list(coords(lam)) + V):
        closed = alternating_q_closed(lam, nu)
        if total != closed:
            raise ArithmeticError(f"alternating Q sum {total} != closed form {closed}")
    return total


def _all_exact(values):
    return all(isinstance(v, (int, Fraction)) for v in values)


# ---------------------------------------------------------------------------
# vectorized recursive evaluator
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _perm_table(n):
    out = []
    for w in all_permutations(n):
        out.append((np.array(w.images), np.array(w.inverse().images), w.sign))
    return tuple(out)


@dataclass(frozen=True)
class _Group:
    """Terms sharing one tensor grid: Jacobi exponents per dimension and their permutations."""

    exponents: tuple
    perms: tuple          # (images, inverse images, signed coefficient)
    cross_exp: float      # exponent on the smooth cross factors of the weight


@functools.lru_cache(maxsize=256)
def _groups(n, k, form):
    perms = _perm_table(n)
    if form == "reduce":
        return (_Group(((k - 1, k - 1),) * n, perms, k - 1),)
    groups = []
    for img, inv, sgn in perms:
        exps = []
        for s in range(n):
            up = k - 1 if img[s] == s else k
            lo = k - 1 if (s + 1 < n and img[s + 1] == s) else k
            exps.append((up, lo))
        # (lam_i - nu_{i-1}) is minus the absorbed distance to the lower endpoint
        flips = sum(1 for i in range(1, n) if img[i] == i - 1)
        groups.append(_Group(tuple(exps), ((img, inv, sgn * (-1) ** flips),), k))
    return tuple(groups)


def _log_prefactor(X, lam, k):
    m = lam.shape[1]
    n = m - 1
    logpi = np.zeros(lam.shape[0])
    for i in range(m):
        for j in range(i + 1, m):
            logpi += np.log(lam[:, i] - lam[:, j])
    return _log_c_norm(n, k) + X[:, n] * lam.sum(axis=1) - 2 * k * logpi


def _is_constant_rows(Y):
    return bool(np.all(Y == Y[:, :1]))


def _grid_slice(group, N, gslice):
    n = len(group.exponents)
    rules = [gauss_jacobi(N, float(up), float(lo)) for up, lo in group.exponents]
    total = N ** n
    idx = np.arange(total)[gslice]
    multi = np.unravel_index(idx, (N,) * n)
    ref = np.stack([rules[i].nodes[multi[i]] for i in range(n)], axis=-1)   # (G, n)
    w = np.ones(idx.size)
    for i in range(n):
        w = w * rules[i].weights[multi[i]]
    return ref, w


def _partial(X, lam, k, nodes, opts, group, gslice):
    """Unnormalized integral over a slice of one group's tensor grid. Returns ((B,), evals)."""
    B, m = lam.shape
    n = m - 1
    N = nodes[0]
    ref, w = _grid_slice(group, N, gslice)
    G = ref.shape[0]
    half = 0.5 * (lam[:, :-1] - lam[:, 1:])                              # (B, n)
    mid = 0.5 * (lam[:, :-1] + lam[:, 1:])
    nu = mid[:, None, :] + half[:, None, :] * ref[None, :, :]            # (B, G, n)

    log_jac = np.zeros(B)
    for i, (up, lo) in enumerate(group.exponents):
        log_jac += (up + lo + 1) * np.log(half[:, i])

    weight = w[None, :] * np.exp(log_jac)[:, None]
    if group.cross_exp != 0 and n > 1:
        weight = weight * _regular_product(lam[:, None, :], nu) ** group.cross_exp

    if opts["shift"]:
        Y = X[:, :n] - X[:, n:]
        extra = None
    else:
        Y = X[:, :n]
        extra = np.exp(-X[:, n][:, None] * nu.sum(axis=-1))

    evals = 0
    constant = opts["fast"] and _is_constant_rows(Y)
    if constant:
        common = np.exp(Y[:, :1] * nu.sum(axis=-1))                      # (B, G)
        evals += B * G
        if opts["form"] == "reduce":
            integrand = alternating_q_closed(lam[:, None, :], nu) * common
        else:
            integrand = np.zeros((B, G))
            for img, inv, coef in group.perms:
                integrand += coef * common / _compact_denominator(lam, nu, img)
    else:
        P = len(group.perms)
        if n == 1:
            # rank-0 inner kernel is a plain exponential
            vals = np.exp(Y[:, :1] * nu[..., 0])[:, :, None]
            evals += B * G
        else:
            inv_all = np.stack([p[1] for p in group.perms])              # (P, n)
            Xin = np.broadcast_to(Y[:, None, inv_all], (B, G, P, n))
            lam_in = np.broadcast_to(nu[:, :, None, :], (B, G, P, n))
            vals, ev = _kernel(Xin.reshape(-1, n), lam_in.reshape(-1, n), k, nodes[1:], opts)
            evals += ev
            vals = vals.reshape(B, G, P)
        integrand = np.zeros((B, G))
        for p, (img, inv, coef) in enumerate(group.perms):
            if opts["form"] == "reduce":
                factor = q_factor(lam[:, None, :], nu[..., img])
            else:
                factor = 1.0 / _compact_denominator(lam, nu, img)
            integrand += coef * factor * vals[:, :, p]
    if extra is not None:
        integrand = integrand * extra
    return np.sum(weight * integrand, axis=1), evals


def _compact_denominator(lam, nu, img):
    # prod_i (lam_i - nu_{w(i)}) over the factors not absorbed into the Jacobi weight
    n = nu.shape[-1]
    out = np.ones(nu.shape[:-1])
    for i in range(n):
        if img[i] == i or img[i] == i - 1:
            continue
        out = out * (lam[:, None, i] - nu[..., img[i]])
    return out


def _rank1_rows(X, lam, k, N):
    # rank-one level of the reduction with Q = v - l2 = half (1 + s) folded into the weights
    rule = gauss_jacobi(N, k - 1, k - 1)
    s = rule.nodes
    wq = rule.weights * (1.0 + s)
    y = X[:, 0] - X[:, 1]
    half = 0.5 * (lam[:, 0] - lam[:, 1])
    mid = 0.5 * (lam[:, 0] + lam[:, 1])
    log_pref = (_log_c_norm(1, k) + X[:, 1] * (lam[:, 0] + lam[:, 1]) + y * mid
                - 2 * k * math.log(2.0))
    return np.exp(log_pref) * (np.exp(np.multiply.outer(y * half, s)) @ wq)


def _kernel(X, lam, k, nodes, opts):
    """Batched kernel values for rows of dominant ``lam``. Returns ((B,), evals)."""
    B, m = lam.shape
    if m == 1:
        return np.exp(X[:, 0] * lam[:, 0]), B
    if m == 2 and opts["form"] == "reduce" and opts["shift"]:
        return _rank1_rows(X, lam, k, nodes[0]), B * nodes[0]
    n = m - 1
    N = nodes[0]
    groups = _groups(n, k, opts["form"])
    per_row = N ** n * math.factorial(n)
    chunk = max(1, _ROW_LIMIT // per_row)
    out = np.empty(B)
    evals = 0
    for start in range(0, B, chunk):
        sl = slice(start, min(B, start + chunk))
        Xc, Lc = X[sl], lam[sl]
        total = np.zeros(Lc.shape[0])
        for g in groups:
            part, ev = _partial(Xc, Lc, k, nodes, opts, g, slice(None))
            total += part
            evals += ev
        out[sl] = np.exp(_log_prefactor(Xc, Lc, k)) * total
    return out, evals


def _evaluate(X, lam, k, nodes, opts, threads):
    """Single top-level evaluation, work split into fixed blocks of outer nodes."""
    X = np.asarray(X, dtype=float)[None, :]
    lam = np.asarray(lam, dtype=float)[None, :]
    m = lam.shape[1]
    if m == 1:
        return float(np.exp(X[0, 0] * lam[0, 0])), 1
    n = m - 1
    N = nodes[0]
    tasks = []
    for g in _groups(n, k, opts["form"]):
        for start in range(0, N ** n, _BLOCK):
            tasks.append((g, slice(start, min(N ** n, start + _BLOCK))))

    def run(task):
        part, ev = _partial(X, lam, k, nodes, opts, task[0], task[1])
        return float(part[0]), ev

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    total = math.fsum(r[0] for r in results)
    evals = sum(r[1] for r in results)
    return float(np.exp(_log_prefactor(X, lam, k))[0] * total), evals


def estimate_evals(n: int, nodes: Sequence[int], form: str = "reduce") -> int:
    """Base-level exponential evaluations of a full recursive evaluation."""
    if n == 0:
        return 1
    return nodes[0] ** n * math.factorial(n) * estimate_evals(n - 1, nodes[1:], form)


# ---------------------------------------------------------------------------
# public kernel evaluators
# ---------------------------------------------------------------------------

def _prepare(X, lam, cfg):
    lam = DominantPoint.of(lam, cfg.min_gap)
    X = np.asarray(X, dtype=float)
    if X.ndim != 1 or X.size != len(lam):
        raise ArityMismatchError(f"X has {X.size} coordinates, lambda has {len(lam)}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X has non-finite entries")
    n = lam.n
    if n > cfg.max_rank:
        raise RecursionDepthError(f"rank {n} exceeds configured maximum {cfg.max_rank}")
    return X, lam, n


def _recursive_report(X, lam, k, cfg, form, method):
    k = float(check_multiplicity(k))
    cfg = cfg or KernelConfig()
    X, lam, n = _prepare(X, lam, cfg)
    nodes = cfg.nodes_for(n)
    opts = {"form": form, "shift": cfg.shift, "fast": cfg.fast_path}
    budget = estimate_evals(n, nodes, form) * (9 if cfg.error_estimate else 1)
    if budget > cfg.max_evals:
        raise CostGuardError(f"estimated {budget:.3g} evaluations exceed max_evals={cfg.max_evals:.3g}")
    t0 = time.perf_counter()
    value, evals = _evaluate(X, lam.array(), k, nodes, opts, cfg.parallel_width)
    err = 0.0
    if cfg.error_estimate and n >= 1:
        finer = (2 * nodes[0],) + nodes[1:]
        v2, ev2 = _evaluate(X, lam.array(), k, finer, opts, cfg.parallel_width)
        err = abs(v2 - value)
        evals += ev2
    elapsed = time.perf_counter() - t0
    return EvalReport(value=value, method=method, error_estimate=err,
                      integrand_evals=int(evals), elapsed=elapsed,
                      flagged=err > cfg.tolerance, nodes_per_level=nodes)


def kernel_reduce(X, lam, k, cfg: KernelConfig | None = None) -> EvalReport:
    """Dunkl kernel ``E_k(X, lam)`` for dominant ``lam`` by recursive reduction.

    Inner levels use the shifted argument ``X' - x_{n+1}`` (unless
    ``cfg.shift`` is off, in which case the factor ``exp(-x_{n+1} sum nu)``
    is carried explicitly). The error estimate is the change when the top
    level node count is doubled.
    """
    return _recursive_report(X, lam, k, cfg, "reduce", "reduce")


def kernel_compact(X, lam, k, cfg: KernelConfig | None = None) -> EvalReport:
    """Same kernel through the compact integrand with weight ``W_{k+1}``.

    Each permutation term gets its own Jacobi exponents: the factor
    ``1 / (lam_i - nu_{w(i)})`` lowers the exponent of whichever endpoint it
    vanishes at, so every term is smooth against its weight.
    """
    return _recursive_report(X, lam, k, cfg, "compact", "compact")


def kernel_unsorted(X, mu, k, cfg: KernelConfig | None = None) -> float:
    """``E_k(X, mu)`` for any ``mu`` with distinct coordinates.

    Sorts ``mu`` into decreasing order and applies the same reordering to
    ``X`` (the kernel is invariant under simultaneous permutation); used for
    reflection terms of Dunkl operators.
    """
    mu = np.asarray(mu, dtype=float)
    order = np.argsort(-mu, kind="stable")
    cfg = (cfg or KernelConfig()).replace(error_estimate=False)
    return kernel_reduce(np.asarray(X, dtype=float)[order], mu[order], k, cfg).value


def kernel_a1_closed(X, lam, k, cfg: KernelConfig | None = None) -> float:
    """Rank-one kernel as a single Gauss-Jacobi integral.

    ``2 Gamma(2k)/Gamma(k)^2 * exp(x2 (l1 + l2)) / (l1 - l2)^(2k)
    * int_{l2}^{l1} exp((x1 - x2) v) (v - l2)^k (l1 - v)^(k-1) dv``
    """
    k = float(check_multiplicity(k))
    cfg = cfg or KernelConfig()
    lam = DominantPoint.of(lam, cfg.min_gap)
    if len(lam) != 2 or len(X) != 2:
        raise ArityMismatchError("the closed rank-one form needs two coordinates")
    x1, x2 = float(X[0]), float(X[1])
    l1, l2 = float(lam[0]), float(lam[1])
    N = cfg.nodes_for(1)[0]
    rule = gauss_jacobi(N, k - 1, k)
    half, mid = 0.5 * (l1 - l2), 0.5 * (l1 + l2)
    v = mid + half * rule.nodes
    log_pref = (math.log(2) + math.lgamma(2 * k) - 2 * math.lgamma(k) + x2 * (l1 + l2)
                - 2 * k * math.log(l1 - l2) + 2 * k * math.log(half))
    return math.exp(log_pref) * float(np.dot(rule.weights, np.exp((x1 - x2) * v)))


def kernel_xu(x, j, lam, k, cfg: KernelConfig | None = None, sign: int = 1) -> float:
    """``E_k(x e_j, lam) = c_{n,k} int exp(sign * x <lam, t>) t_j (prod t)^(k-1) dt``.

    ``j`` is 0-based. ``sign=+1`` is the correct orientation (it reduces to
    ``exp(x lam_j)`` as ``k -> 0`` and agrees with the rank-one closed form);
    ``sign=-1`` is accepted only for reporting the opposite convention.
    """
    k = float(check_multiplicity(k))
    cfg = cfg or KernelConfig()
    lam = np.asarray(lam, dtype=float)
    n = lam.size - 1
    if not 0 <= j <= n:
        raise ArityMismatchError(f"index {j} out of range for {n + 1} coordinates")
    if sign == 1:
        _xu_selftest()
    N = max(cfg.nodes_for(max(n, 1))[0], 16)
    rule = simplex_rule(n, k, N)
    t = rule.points
    vals = np.exp(sign * float(x) * (t @ lam)) * t[:, j]
    return c_norm(n, k) * math.fsum(rule.weights * vals)


@functools.lru_cache(maxsize=1)
def _xu_selftest():
    # orientation check of the simplex formula against the rank-one closed form
    cfg = KernelConfig(nodes_per_level=(48,))
    for k in (0.5, 1.0, 2.0):
        for x in (-1.0, 0.7):
            got = _xu_raw(x, 1, np.array([1.0, -1.0]), k, 48)
            ref = kernel_a1_closed((0.0, x), (1.0, -1.0), k, cfg)
            if abs(got - ref) > 1e-9 * max(1.0, abs(ref)):
                raise RuntimeError(
                    f"simplex formula self-test failed at k={k}, x={x}: {got} vs {ref}")
    return True


def _xu_raw(x, j, lam, k, N):
    rule = simplex_rule(lam.size - 1, k, N)
    t = rule.points
    return c_norm(lam.size - 1, k) * math.fsum(rule.weights * np.exp(x * (t @ lam)) * t[:, j])


def kernel_symmetrized(X, lam, k, cfg: KernelConfig | None = None, max_rank: int = 2) -> float:
    """Weyl average ``|W|^-1 sum_w E_k(w X, lam)``."""
    cfg = (cfg or KernelConfig()).replace(error_estimate=False)
    X = np.asarray(X, dtype=float)
    n = X.size - 1
    if n > max_rank:
        raise CostGuardError(
            f"symmetrized kernel needs {math.factorial(n + 1)} evaluations; rank {n} exceeds {max_rank}")
    vals = [kernel_reduce(w.act(X), lam, k, cfg).value for w in all_permutations(n + 1)]
    return math.fsum(vals) / len(vals)


# ---------------------------------------------------------------------------
# change of variables onto the simplex
# ---------------------------------------------------------------------------

def change_of_vars_t(lam, nu, check: bool = True):
    """``t_p = prod_i (nu_i - lam_p) / prod_{i != p} (lam_i - lam_p)``, ``p = 1..n+1``.

    Maps the box of ``lam`` onto the simplex; exact for exact inputs.
    """
    L, V = coords(lam), coords(nu)
    n = len(V)
    if len(L) != n + 1:
        raise ArityMismatchError("lambda must have one more coordinate than nu")
    t = []
    for p in range(n + 1):
        num = 1
        for i in range(n):
            num = (V[i] - L[p]) * num
        den = 1
        for i in range(n + 1):
            if i != p:
                den = (L[i] - L[p]) * den
        t.append(num / den)
    if check and not isinstance(t[0], np.ndarray):
        bad = [p for p, tp in enumerate(t) if tp < -1e-12]
        if bad:
            raise ValueError(f"nu outside the box: t_p < 0 for p in {bad}")
    return t


def jacobian_t(lam, nu):
    """``prod_{i<p<=n} (nu_i - nu_p) / prod_{i<p<=n+1} (lam_i - lam_p)``.

    This is the absolute value of ``det d(t_1..t_n)/d(nu_1..nu_n)``; the
    signed determinant carries ``(-1)^n``.
    """
    return pi_product(nu) / pi_product(lam)


def negativity_witness(lam):
    """A positive-sign permutation whose compact-form denominator is negative inside the box.

    Returns ``(w, nu, value)`` with ``w`` the 3-cycle ``0 -> 1 -> 2 -> 0``
    (identity beyond), ``nu`` the box center and ``value`` the product
    ``prod_i (lam_i - nu_{w(i)})``. Exact for int/Fraction input.
    """
    L = list(lam)
    n = len(L) - 1
    if n < 3:
        raise ArityMismatchError("the witness needs at least four coordinates")
    exact = _all_exact(L)
    half = Fraction(1, 2) if exact else 0.5
    nu = [(L[i] + L[i + 1]) * half for i in range(n)]
    w = Permutation([1, 2, 0] + list(range(3, n)))
    value = 1
    for i in range(n):
        value = (L[i] - nu[w(i)]) * value
    return w, nu, value
