"""Dense homogeneous polynomials over a fixed graded-lex monomial order.

Coefficients live in a float64 vector indexed by the rank of the exponent in
descending lexicographic order (X0 > X1 > ...) among all exponents of the
polynomial's total degree.  ``X0**d`` always has rank 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AsymmetricMatrixError,
    InvalidExponentError,
    InvalidMapError,
    ShapeMismatchError,
)

Exponent = tuple[int, ...]

ORTHO_TOL = 1e-12
SYMMETRY_TOL = 1e-12


def n_monomials(nvars: int, degree: int) -> int:
    return comb(degree + nvars - 1, nvars - 1)


@lru_cache(maxsize=None)
def monomials(nvars: int, degree: int) -> tuple[Exponent, ...]:
    """All exponents of the given degree, in rank order."""
    if nvars < 1 or degree < 0:
        raise InvalidExponentError(f"bad shape nvars={nvars}, degree={degree}")
    if nvars == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in monomials(nvars - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _rank_table(nvars: int, degree: int) -> dict[Exponent, int]:
    return {e: i for i, e in enumerate(monomials(nvars, degree))}


@lru_cache(maxsize=None)
def exponent_matrix(nvars: int, degree: int) -> np.ndarray:
    m = np.array(monomials(nvars, degree), dtype=np.int64).reshape(-1, nvars)
    m.setflags(write=False)
    return m


def monomial_rank(e: Sequence[int], nvars: int, degree: int) -> int:
    e = tuple(int(v) for v in e)
    if len(e) != nvars or any(v < 0 for v in e) or sum(e) != degree:
        raise InvalidExponentError(f"exponent {e} is not valid for nvars={nvars}, degree={degree}")
    return _rank_table(nvars, degree)[e]


def monomial_unrank(r: int, nvars: int, degree: int) -> Exponent:
    table = monomials(nvars, degree)
    if not 0 <= r < len(table):
        raise InvalidExponentError(f"rank {r} out of range for nvars={nvars}, degree={degree}")
    return table[r]


@dataclass(frozen=True, eq=False)
class HomogPoly:
    nvars: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        expected = n_monomials(self.nvars, self.degree)
        if c.size != expected:
            raise ShapeMismatchError(
                f"{c.size} coefficients given, nvars={self.nvars} degree={self.degree} needs {expected}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, nvars: int, degree: int) -> "HomogPoly":
        return cls(nvars, degree, np.zeros(n_monomials(nvars, degree)))

    @classmethod
    def monomial(cls, e: Sequence[int], coeff: float = 1.0) -> "HomogPoly":
        nvars, degree = len(e), int(sum(e))
        c = np.zeros(n_monomials(nvars, degree))
        c[monomial_rank(e, nvars, degree)] = coeff
        return cls(nvars, degree, c)

    @classmethod
    def from_terms(cls, nvars: int, degree: int, terms: dict[Exponent, float] | Iterable) -> "HomogPoly":
        c = np.zeros(n_monomials(nvars, degree))
        items = terms.items() if isinstance(terms, dict) else terms
        for e, v in items:
            c[monomial_rank(e, nvars, degree)] += v
        return cls(nvars, degree, c)

    @classmethod
    def linear(cls, v: Sequence[float]) -> "HomogPoly":
        return cls(len(v), 1, np.asarray(v, dtype=np.float64))

    def terms(self) -> list[tuple[Exponent, float]]:
        """Nonzero (exponent, coefficient) pairs in rank order."""
        mons = monomials(self.nvars, self.degree)
        return [(mons[i], float(c)) for i, c in enumerate(self.coeffs) if c != 0.0]

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def __call__(self, x) -> float | np.ndarray:
        return evaluate(self, x)

    def __add__(self, other: "HomogPoly") -> "HomogPoly":
        return linear_combine(1.0, self, 1.0, other)

    def __sub__(self, other: "HomogPoly") -> "HomogPoly":
        return linear_combine(1.0, self, -1.0, other)

    def __neg__(self) -> "HomogPoly":
        return HomogPoly(self.nvars, self.degree, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, HomogPoly):
            return mul(self, other)
        return HomogPoly(self.nvars, self.degree, self.coeffs * float(other))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "HomogPoly":
        if k < 0:
            raise ValueError("negative power")
        out = HomogPoly.monomial((0,) * self.nvars)
        for _ in range(k):
            out = mul(out, self)
        return out

    def same_as(self, other: "HomogPoly") -> bool:
        """Bit-exact equality of shape and coefficients."""
        return (
            self.nvars == other.nvars
            and self.degree == other.degree
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __repr__(self) -> str:
        return f"HomogPoly(nvars={self.nvars}, degree={self.degree}, nnz={np.count_nonzero(self.coeffs)})"


def _check_same_shape(f: HomogPoly, g: HomogPoly) -> None:
    if f.nvars != g.nvars or f.degree != g.degree:
        raise ShapeMismatchError(
            f"shape mismatch: ({f.nvars} vars, deg {f.degree}) vs ({g.nvars} vars, deg {g.degree})"
        )


def linear_combine(a: float, f: HomogPoly, b: float, g: HomogPoly) -> HomogPoly:
    _check_same_shape(f, g)
    return HomogPoly(f.nvars, f.degree, a * f.coeffs + b * g.coeffs)


@lru_cache(maxsize=None)
def _product_index(nvars: int, d1: int, d2: int) -> np.ndarray:
    """idx[i, j] = rank of (monomial i of degree d1) + (monomial j of degree d2)."""
    e1 = exponent_matrix(nvars, d1)
    e2 = exponent_matrix(nvars, d2)
    table = _rank_table(nvars, d1 + d2)
    idx = np.empty((len(e1), len(e2)), dtype=np.int64)
    for i, a in enumerate(e1):
        for j, b in enumerate(e2):
            idx[i, j] = table[tuple(int(v) for v in a + b)]
    idx.setflags(write=False)
    return idx


def mul(f: HomogPoly, g: HomogPoly) -> HomogPoly:
    if f.nvars != g.nvars:
        raise ShapeMismatchError(f"nvars mismatch: {f.nvars} vs {g.nvars}")
    idx = _product_index(f.nvars, f.degree, g.degree)
    out = np.bincount(
        idx.ravel(),
        weights=np.outer(f.coeffs, g.coeffs).ravel(),
        minlength=n_monomials(f.nvars, f.degree + g.degree),
    )
    return HomogPoly(f.nvars, f.degree + g.degree, out)


def monomial_values(x, nvars: int, degree: int) -> np.ndarray:
    """Matrix of monomial values, shape (npoints, n_monomials); 1-D input gives 1-D output."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != nvars:
        raise ShapeMismatchError(f"point has {pts.shape[-1]} coordinates, polynomial has {nvars} variables")
    E = exponent_matrix(nvars, degree)
    # integer power table, then one gather per variable (exact for integer points)
    powers = np.ones((pts.shape[0], nvars, degree + 1))
    for k in range(1, degree + 1):
        powers[:, :, k] = powers[:, :, k - 1] * pts
    vals = np.ones((pts.shape[0], E.shape[0]))
    for i in range(nvars):
        vals *= powers[:, i, E[:, i]]
    return vals[0] if single else vals


def evaluate(f: HomogPoly, x) -> float | np.ndarray:
    """Value of f at a point (shape (nvars,)) or at each row of a point matrix."""
    vals = monomial_values(x, f.nvars, f.degree)
    out = vals @ f.coeffs
    return float(out) if np.ndim(out) == 0 else out


def diff(f: HomogPoly, var: int) -> HomogPoly:
    """Partial derivative with respect to variable ``var``."""
    if f.degree == 0:
        return HomogPoly.zero(f.nvars, 0)
    table = _rank_table(f.nvars, f.degree - 1)
    out = np.zeros(n_monomials(f.nvars, f.degree - 1))
    for e, c in zip(monomials(f.nvars, f.degree), f.coeffs):
        if e[var] and c:
            lowered = list(e)
            lowered[var] -= 1
            out[table[tuple(lowered)]] += c * e[var]
    return HomogPoly(f.nvars, f.degree - 1, out)


@dataclass(frozen=True, eq=False)
class OrthoMap:
    """Orthogonal change of variables; applying it to f gives y -> f(matrix.T @ y)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidMapError(f"map matrix must be square, got shape {m.shape}")
        err = np.max(np.abs(m.T @ m - np.eye(m.shape[0])))
        if err > ORTHO_TOL:
            raise InvalidMapError(f"map matrix is not orthogonal (|Q^T Q - I|_inf = {err:.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, n: int) -> "OrthoMap":
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "OrthoMap":
        return OrthoMap(self.matrix.T)


def apply_map(f: HomogPoly, Q: OrthoMap | np.ndarray) -> HomogPoly:
    """Return F with F(y) = f(Q.T @ y)."""
    if not isinstance(Q, OrthoMap):
        Q = OrthoMap(Q)
    if Q.dim != f.nvars:
        raise InvalidMapError(f"map dimension {Q.dim} does not match nvars={f.nvars}")
    n = f.nvars
    # x_i = sum_j Q[j, i] y_j
    forms = [HomogPoly.linear(Q.matrix[:, i]) for i in range(n)]
    products: dict[Exponent, HomogPoly] = {(0,) * n: HomogPoly.monomial((0,) * n)}

    def product(e: Exponent) -> HomogPoly:
        hit = products.get(e)
        if hit is not None:
            return hit
        k = max(i for i, v in enumerate(e) if v)
        lowered = e[:k] + (e[k] - 1,) + e[k + 1:]
        res = mul(product(lowered), forms[k])
        products[e] = res
        return res

    out = np.zeros_like(f.coeffs)
    for e, c in zip(monomials(n, f.degree), f.coeffs):
        if c:
            out += c * product(e).coeffs
    return HomogPoly(n, f.degree, out)


def slice_x0(f: HomogPoly) -> tuple[float, HomogPoly, HomogPoly, HomogPoly, HomogPoly]:
    """Split a 4-variable quartic as c0*X0^4 + f1*X0^3 + f2*X0^2 + f3*X0 + f4.

    The f_k are ternary forms of degree k in (X1, X2, X3).
    """
    if f.nvars != 4 or f.degree != 4:
        raise ShapeMismatchError("slice_x0 needs a 4-variable quartic")
    parts = [np.zeros(n_monomials(3, k)) for k in range(5)]
    for e, c in zip(monomials(4, 4), f.coeffs):
        k = 4 - e[0]
        parts[k][monomial_rank(e[1:], 3, k)] = c
    c0 = float(parts[0][0])
    return (c0,) + tuple(HomogPoly(3, k, parts[k]) for k in range(1, 5))


def assemble_x0(c0: float, f1: HomogPoly, f2: HomogPoly, f3: HomogPoly, f4: HomogPoly) -> HomogPoly:
    """Inverse of :func:`slice_x0`."""
    out = np.zeros(n_monomials(4, 4))
    out[0] = c0
    for k, fk in ((1, f1), (2, f2), (3, f3), (4, f4)):
        for e, c in zip(monomials(3, k), fk.coeffs):
            out[monomial_rank((4 - k,) + e, 4, 4)] = c
    return HomogPoly(4, 4, out)


def lift(f: HomogPoly, nvars: int = 4) -> HomogPoly:
    """Embed a form in the trailing variables of a larger ring (no X0 dependence)."""
    shift = nvars - f.nvars
    if shift < 0:
        raise ShapeMismatchError("cannot lift into fewer variables")
    out = np.zeros(n_monomials(nvars, f.degree))
    for e, c in zip(monomials(f.nvars, f.degree), f.coeffs):
        out[monomial_rank((0,) * shift + e, nvars, f.degree)] = c
    return HomogPoly(nvars, f.degree, out)


def x0_power(k: int, nvars: int = 4) -> HomogPoly:
    return HomogPoly.monomial((k,) + (0,) * (nvars - 1))


def sum_of_squares(squares: Sequence[HomogPoly], nvars: int, degree: int) -> HomogPoly:
    acc = HomogPoly.zero(nvars, degree)
    for r in squares:
        acc = acc + mul(r, r)
    return acc


@lru_cache(maxsize=None)
def _gram_index(basis: tuple[Exponent, ...]) -> tuple[np.ndarray, int, int]:
    nvars = len(basis[0])
    d = sum(basis[0])
    if any(len(e) != nvars or sum(e) != d for e in basis):
        raise InvalidExponentError("Gram basis exponents must share one nvars and degree")
    table = _rank_table(nvars, 2 * d)
    idx = np.array([[table[tuple(a + b for a, b in zip(u, v))] for v in basis] for u in basis], dtype=np.int64)
    idx.setflags(write=False)
    return idx, nvars, 2 * d


def gram_index(basis: Sequence[Exponent]) -> np.ndarray:
    """idx[i, j] = rank (in degree 2d) of basis[i] + basis[j]."""
    return _gram_index(tuple(tuple(e) for e in basis))[0]


def from_gram(G, basis: Sequence[Exponent]) -> HomogPoly:
    """The form m(X)^T G m(X) for the monomial vector m over ``basis``."""
    basis = tuple(tuple(int(v) for v in e) for e in basis)
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (len(basis), len(basis)):
        raise ShapeMismatchError(f"Gram matrix shape {G.shape} does not match basis size {len(basis)}")
    asym = np.max(np.abs(G - G.T)) if G.size else 0.0
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(G))):
        raise AsymmetricMatrixError(f"Gram matrix is not symmetric (|G - G^T|_inf = {asym:.2e})")
    idx, nvars, degree = _gram_index(basis)
    out = np.bincount(idx.ravel(), weights=G.ravel(), minlength=n_monomials(nvars, degree))
    return HomogPoly(nvars, degree, out)


def quadratic_gram(f: HomogPoly) -> np.ndarray:
    """The unique symmetric matrix A with f(x) = x^T A x, for a quadratic form."""
    if f.degree != 2:
        raise ShapeMismatchError("quadratic_gram needs a degree-2 form")
    n = f.nvars
    A = np.zeros((n, n))
    for e, c in zip(monomials(n, 2), f.coeffs):
        nz = [i for i, v in enumerate(e) if v]
        if len(nz) == 1:
            A[nz[0], nz[0]] = c
        else:
            A[nz[0], nz[1]] = A[nz[1], nz[0]] = c / 2
    return A


def sphere_form(nvars: int = 4, power: int = 1) -> HomogPoly:
    """(X0^2 + ... + X_{n-1}^2)**power."""
    return from_gram(np.eye(nvars), monomials(nvars, 1)) ** power
