"""Sparse multivariate polynomials, permutations and exact divided differences.

Polynomials store a map from exponent tuples to coefficients. Coefficients
are either exact (``int`` / ``fractions.Fraction``) or ``float``; arithmetic
between exact operands stays exact, so polynomial identities can be checked
with zero residual.

Indices are 0-based throughout. A permutation ``w`` acts on points by
``(w X)_i = X_{w(i)}`` and on polynomials by ``(w . p)(X) = p(w^{-1} X)``,
so that permuting a polynomial and then evaluating it agrees with evaluating
the original polynomial at the inversely permuted point.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from numbers import Number
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple

import numpy as np

from dunklkit.errors import ArityMismatchError

MultiIndex = Tuple[int, ...]

__all__ = [
    "MultiIndex",
    "SparsePolynomial",
    "Permutation",
    "all_permutations",
    "poly_arith",
    "permute_poly",
    "divided_difference",
    "eval_poly",
    "pi_product",
    "coords",
    "is_exact",
]


def is_exact(c) -> bool:
    """True for ints (including bool) and Fractions."""
    return isinstance(c, (int, Fraction)) and not isinstance(c, float)


def coords(v):
    """Split a point into a list of coordinates.

    For an ndarray the last axis indexes coordinates, so batched points of
    shape ``(..., m)`` come back as ``m`` arrays of shape ``(...)``.
    """
    if isinstance(v, np.ndarray):
        return [v[..., i] for i in range(v.shape[-1])]
    return list(v)


def _arity_of(v) -> int:
    if isinstance(v, np.ndarray):
        return v.shape[-1]
    return len(v)


class SparsePolynomial:
    """Polynomial in ``arity`` variables stored as ``{exponents: coefficient}``.

    Instances are immutable after construction and never store zero
    coefficients.

    Parameters
    ----------
    arity : int
        Number of variables.
    terms : mapping, optional
        Exponent tuple to coefficient. Zero coefficients are dropped and
        repeated keys are not possible, so no merging is done here.
    """

    __slots__ = ("_arity", "_terms")

    def __init__(self, arity: int, terms: Mapping[MultiIndex, Number] | None = None):
        if arity < 1:
            raise ValueError("arity must be positive")
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != arity:
                raise ArityMismatchError(
                    f"exponent tuple {exps} does not have arity {arity}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            if c != 0:
                clean[exps] = c
        self._arity = arity
        self._terms = clean

    @classmethod
    def _raw(cls, arity: int, terms: Dict[MultiIndex, Number]) -> "SparsePolynomial":
        # trusted constructor: caller guarantees normalized terms
        obj = cls.__new__(cls)
        obj._arity = arity
        obj._terms = terms
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, arity: int) -> "SparsePolynomial":
        return cls._raw(arity, {})

    @classmethod
    def constant(cls, arity: int, c: Number = 1) -> "SparsePolynomial":
        return cls(arity, {(0,) * arity: c})

    @classmethod
    def variable(cls, arity: int, i: int, coeff: Number = 1) -> "SparsePolynomial":
        """The coordinate function ``x_i`` (0-based)."""
        if not 0 <= i < arity:
            raise IndexError(f"variable index {i} out of range for arity {arity}")
        exps = [0] * arity
        exps[i] = 1
        return cls(arity, {tuple(exps): coeff})

    @classmethod
    def variables(cls, arity: int) -> list["SparsePolynomial"]:
        return [cls.variable(arity, i) for i in range(arity)]

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: Number = 1) -> "SparsePolynomial":
        return cls(len(exps), {tuple(exps): coeff})

    # -- basic properties ---------------------------------------------------

    @property
    def arity(self) -> int:
        return self._arity

    @property
    def terms(self) -> Dict[MultiIndex, Number]:
        """A copy of the term map."""
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[MultiIndex, Number]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    @property
    def mode(self) -> str:
        """``"exact"`` when every coefficient is an int or Fraction."""
        return "exact" if all(is_exact(c) for c in self._terms.values()) else "float"

    def coefficient(self, exps: Sequence[int]) -> Number:
        return self._terms.get(tuple(exps), 0)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def homogeneous_components(self) -> Dict[int, "SparsePolynomial"]:
        parts: Dict[int, Dict[MultiIndex, Number]] = {}
        for exps, c in self._terms.items():
            parts.setdefault(sum(exps), {})[exps] = c
        return {d: SparsePolynomial._raw(self._arity, t) for d, t in sorted(parts.items())}

    def to_float(self) -> "SparsePolynomial":
        return SparsePolynomial(self._arity, {e: float(c) for e, c in self._terms.items()})

    def to_exact(self) -> "SparsePolynomial":
        """Convert float coefficients to the Fractions they represent exactly."""
        return SparsePolynomial(self._arity, {e: c if is_exact(c) else Fraction(c)
                                              for e, c in self._terms.items()})

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "SparsePolynomial":
        if isinstance(other, SparsePolynomial):
            if other._arity != self._arity:
                raise ArityMismatchError(
                    f"arity mismatch: {self._arity} vs {other._arity}")
            return other
        if isinstance(other, Number):
            return SparsePolynomial.constant(self._arity, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for exps, c in other._terms.items():
            v = out.get(exps, 0) + c
            if v == 0:
                out.pop(exps, None)
            else:
                out[exps] = v
        return SparsePolynomial._raw(self._arity, out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePolynomial._raw(self._arity, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: Number) -> "SparsePolynomial":
        if c == 0:
            return SparsePolynomial.zero(self._arity)
        return SparsePolynomial(self._arity, {e: v * c for e, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[MultiIndex, Number] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return SparsePolynomial._raw(self._arity, {e: c for e, c in out.items() if c != 0})

    __rmul__ = __mul__

    def __pow__(self, m: int):
        if not isinstance(m, int) or m < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = SparsePolynomial.constant(self._arity, 1)
        base = self
        while m:
            if m & 1:
                result = result * base
            m >>= 1
            if m:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Number):
            other = SparsePolynomial.constant(self._arity, other)
        if not isinstance(other, SparsePolynomial):
            return NotImplemented
        return self._arity == other._arity and self._terms == other._terms

    def __hash__(self):
        return hash((self._arity, frozenset(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"SparsePolynomial({self._arity}, 0)"
        parts = []
        for exps, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(f"x{i + 1}" + (f"^{e}" if e > 1 else "")
                            for i, e in enumerate(exps) if e)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return f"SparsePolynomial({self._arity}, " + " + ".join(parts) + ")"

    # -- calculus and substitutions ----------------------------------------

    def derivative(self, i: int) -> "SparsePolynomial":
        out = {}
        for exps, c in self._terms.items():
            if exps[i]:
                e = list(exps)
                e[i] -= 1
                out[tuple(e)] = c * exps[i]
        return SparsePolynomial._raw(self._arity, out)

    def relabel(self, images: Sequence[int], arity: int | None = None) -> "SparsePolynomial":
        """Rename variable ``x_i`` to ``x_{images[i]}`` in a polynomial of ``arity`` vars."""
        arity = self._arity if arity is None else arity
        out: Dict[MultiIndex, Number] = {}
        for exps, c in self._terms.items():
            e = [0] * arity
            for i, a in enumerate(exps):
                e[images[i]] += a
            key = tuple(e)
            out[key] = out.get(key, 0) + c
        return SparsePolynomial._raw(arity, {e: c for e, c in out.items() if c != 0})

    def swap(self, i: int, j: int) -> "SparsePolynomial":
        """``p`` composed with the transposition of ``x_i`` and ``x_j``."""
        out = {}
        for exps, c in self._terms.items():
            e = list(exps)
            e[i], e[j] = e[j], e[i]
            out[tuple(e)] = c
        return SparsePolynomial._raw(self._arity, out)

    def __call__(self, X):
        return eval_poly(self, X)


class Permutation:
    """A permutation of ``{0, ..., m-1}`` in one-line notation.

    ``w(i) = images[i]``. The product is chosen so that acting on points is a
    homomorphism: ``(a * b).act(X) == a.act(b.act(X))``.
    """

    __slots__ = ("images", "_sign")

    def __init__(self, images: Iterable[int]):
        images = tuple(int(i) for i in images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"{images} is not a permutation of 0..{len(images) - 1}")
        self.images = images
        self._sign = None

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        return cls(range(m))

    @classmethod
    def transposition(cls, m: int, i: int, j: int) -> "Permutation":
        images = list(range(m))
        images[i], images[j] = images[j], images[i]
        return cls(images)

    @property
    def size(self) -> int:
        return len(self.images)

    def __len__(self):
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    @property
    def sign(self) -> int:
        """Parity via cycle decomposition."""
        if self._sign is None:
            seen = [False] * len(self.images)
            s = 1
            for start in range(len(self.images)):
                if seen[start]:
                    continue
                length = 0
                i = start
                while not seen[i]:
                    seen[i] = True
                    i = self.images[i]
                    length += 1
                if length % 2 == 0:
                    s = -s
            self._sign = s
        return self._sign

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, wi in enumerate(self.images):
            inv[wi] = i
        return Permutation(inv)

    def __mul__(self, other: "Permutation") -> "Permutation":
        if len(other) != len(self):
            raise ArityMismatchError("permutation sizes differ")
        # (a*b)X = a(bX)  =>  ((a*b)X)_i = X_{b(a(i))}
        return Permutation(other.images[a] for a in self.images)

    def act(self, X):
        """``(w X)_i = X_{w(i)}``; ndarrays are permuted along the last axis."""
        if isinstance(X, np.ndarray):
            return X[..., list(self.images)]
        return type(X)(X[i] for i in self.images) if isinstance(X, tuple) else [X[i] for i in self.images]

    def __eq__(self, other):
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Permutation({list(self.images)})"


def all_permutations(m: int) -> list[Permutation]:
    """All of ``S_m`` in lexicographic order of one-line notation."""
    return [Permutation(p) for p in itertools.permutations(range(m))]


def poly_arith(p: SparsePolynomial, q, op: str) -> SparsePolynomial:
    """Add, multiply or scale polynomials (``op`` in ``{"add", "mul", "scale"}``)."""
    if op == "add":
        if not isinstance(q, SparsePolynomial) or q.arity != p.arity:
            raise ArityMismatchError("add needs polynomials of equal arity")
        return p + q
    if op == "mul":
        if not isinstance(q, SparsePolynomial) or q.arity != p.arity:
            raise ArityMismatchError("mul needs polynomials of equal arity")
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown op {op!r}")


def permute_poly(p: SparsePolynomial, w: Permutation) -> SparsePolynomial:
    """Return ``X -> p(w^{-1} X)``."""
    if w.size != p.arity:
        raise ArityMismatchError(f"permutation of size {w.size} on arity {p.arity}")
    # exponent of x_j in the result is the exponent of x_{w(j)} in p
    img = w.images
    return SparsePolynomial._raw(
        p.arity, {tuple(e[img[j]] for j in range(p.arity)): c for e, c in p.items()})


def divided_difference(p: SparsePolynomial, i: int, j: int) -> SparsePolynomial:
    """Exact quotient ``(p - p o (i j)) / (x_i - x_j)``.

    Synthetic division in ``x_i`` with ``x_j`` treated as part of the
    coefficient ring. The remainder is checked to vanish.
    """
    m = p.arity
    if i == j:
        raise ValueError("divided difference needs i != j")
    if not (0 <= i < m and 0 <= j < m):
        raise ArityMismatchError(f"indices ({i}, {j}) out of range for arity {m}")
    num = p - p.swap(i, j)
    if num.is_zero():
        return SparsePolynomial.zero(m)

    # group the numerator by the power of x_i
    by_deg: Dict[int, Dict[MultiIndex, Number]] = {}
    for exps, c in num.items():
        e = list(exps)
        d = e[i]
        e[i] = 0
        by_deg.setdefault(d, {})[tuple(e)] = c
    top = max(by_deg)

    def shift_j(terms):
        out = {}
        for exps, c in terms.items():
            e = list(exps)
            e[j] += 1
            out[tuple(e)] = c
        return out

    def add(a, b):
        out = dict(a)
        for e, c in b.items():
            v = out.get(e, 0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        return out

    quotient: Dict[MultiIndex, Number] = {}
    carry: Dict[MultiIndex, Number] = {}
    for d in range(top, 0, -1):
        carry = add(by_deg.get(d, {}), shift_j(carry))
        for exps, c in carry.items():
            e = list(exps)
            e[i] = d - 1
            quotient[tuple(e)] = c
    remainder = add(by_deg.get(0, {}), shift_j(carry))
    scale = max((abs(float(c)) for c in num._terms.values()), default=1.0)
    bad = [c for c in remainder.values()
           if is_exact(c) or abs(float(c)) > 1e-12 * scale]
    if bad:
        raise ArithmeticError(
            f"nonzero remainder in divided difference ({i}, {j}): {remainder}")
    return SparsePolynomial._raw(m, quotient)


def eval_poly(p: SparsePolynomial, X):
    """Evaluate ``p`` at a point or at a batch of points (last axis = coordinates).

    Exact coefficients evaluated at exact coordinates give exact results.
    """
    if _arity_of(X) != p.arity:
        raise ArityMismatchError(f"point of arity {_arity_of(X)} for polynomial of arity {p.arity}")
    if isinstance(X, np.ndarray):
        if p.is_zero():
            return np.zeros(X.shape[:-1])
        maxdeg = max(max(e) for e, _ in p.items())
        powers = np.ones(X.shape + (maxdeg + 1,))
        for d in range(1, maxdeg + 1):
            powers[..., d] = powers[..., d - 1] * X
        out = np.zeros(X.shape[:-1])
        for exps, c in p.items():
            term = np.full(X.shape[:-1], float(c))
            for i, e in enumerate(exps):
                if e:
                    term = term * powers[..., i, e]
            out = out + term
        return out
    total = 0
    for exps, c in p.items():
        term = c
        for x, e in zip(X, exps):
            if e:
                term = term * x ** e
        total = total + term
    return total


def pi_product(lam):
    """``prod_{i<j} (lam_i - lam_j)``; works on numbers, polynomials and batched arrays."""
    c = coords(lam)
    out = 1
    for a in range(len(c)):
        for b in range(a + 1, len(c)):
            out = (c[a] - c[b]) * out
    return out
