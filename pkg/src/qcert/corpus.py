"""Seeded test corpora: generators with known ground truth, and fault injection.

Every generator takes a seed (or a ``numpy.random.Generator``) and is fully
deterministic.
"""

from __future__ import annotations

import copy
import enum

import numpy as np
from scipy.stats import ortho_group

from .certificate import Certificate, Factor, _RawMap
from .polycore import HomogPoly, OrthoMap, apply_map, monomials, sphere_form, sum_of_squares
from .polytext import parse_poly

CHOI_LAM_TEXT = "x0^4 + x1^2*x2^2 + x2^2*x3^2 + x3^2*x1^2 - 4*x0*x1*x2*x3"
MOTZKIN_TEXT = "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2*x3^2 + x3^6"
EPSILONS = (0.0, 1e-3, 1.0)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def choi_lam() -> HomogPoly:
    """Choi-Lam quartic: nonnegative by AM-GM, not a sum of squares."""
    return parse_poly(CHOI_LAM_TEXT)


def motzkin() -> HomogPoly:
    """Motzkin sextic in three variables (x1, x2, x3 renamed to X1, X2, X3)."""
    f4 = parse_poly(MOTZKIN_TEXT)
    # drop the x0 slot: no monomial of the text involves x0
    return HomogPoly.from_terms(3, 6, [(e[1:], c) for e, c in f4.terms()])


def random_quadrics(seed, k: int, nvars: int = 4) -> list[HomogPoly]:
    """k quadratic forms with independent standard normal coefficients."""
    rng = _rng(seed)
    n = len(monomials(nvars, 2))
    return [HomogPoly(nvars, 2, rng.standard_normal(n)) for _ in range(k)]


def random_sos(seed, k: int | None = None) -> tuple[HomogPoly, list[HomogPoly]]:
    """Sum of k squares of random quadrics (k drawn from 2..6 if not given)."""
    rng = _rng(seed)
    if k is None:
        k = int(rng.integers(2, 7))
    squares = random_quadrics(rng, k)
    return sum_of_squares(squares, 4, 4), squares


def sos_eps(seed, eps: float) -> HomogPoly:
    """Random sos quartic plus eps * (sum x_i^2)^2, coefficients normalized to max 1."""
    f, _ = random_sos(seed)
    f = f * (1.0 / f.norm_inf())
    return f + sphere_form(4, 2) * eps if eps else f


def corpus_instances(n: int, seed: int = 0) -> list[tuple[float, HomogPoly]]:
    """n instances cycling through EPSILONS, each with its own child seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [(EPSILONS[i % len(EPSILONS)], sos_eps(np.random.default_rng(s), EPSILONS[i % len(EPSILONS)])) for i, s in enumerate(children)]


def random_orthogonal(seed, dim: int = 4) -> OrthoMap:
    rng = _rng(seed)
    return OrthoMap(ortho_group.rvs(dim, random_state=rng))


def indefinite(seed) -> HomogPoly:
    """x0^4 - c x0^2 x1^2 (c in [2, 4]) in randomly rotated coordinates.

    On the sphere the base form reaches -c^2/(4(1+c)) < 0, so every
    member is negative somewhere.
    """
    rng = _rng(seed)
    c = float(rng.uniform(2.0, 4.0))
    base = HomogPoly.from_terms(4, 4, {(4, 0, 0, 0): 1.0, (2, 2, 0, 0): -c})
    return apply_map(base, random_orthogonal(rng))


class TamperField(enum.Enum):
    SQUARE = "square"
    QMULT_SQUARE = "qmult_square"
    QMULT = "qmult"
    P = "p"
    TRANSFORM = "transform"
    INPUT = "input"


def _bump(poly: HomogPoly, rng: np.random.Generator, rel: float) -> HomogPoly:
    c = np.array(poly.coeffs)
    big = np.flatnonzero(np.abs(c) >= 0.5 * np.max(np.abs(c)))
    i = int(rng.choice(big))
    c[i] += rel * float(rng.choice([-1.0, 1.0])) * np.max(np.abs(c))
    return HomogPoly(poly.nvars, poly.degree, c)


def _largest(polys: list[HomogPoly], rng: np.random.Generator) -> int:
    norms = np.array([p.norm_inf() for p in polys])
    return int(rng.choice(np.flatnonzero(norms >= 0.5 * norms.max())))


def tamper(cert: Certificate, seed, field: TamperField | None = None, rel: float = 1e-3) -> tuple[Certificate, TamperField]:
    """Copy of ``cert`` with exactly one field perturbed.

    The perturbation adds ``rel * ||field||_inf`` (random sign) to one of the
    field's larger coefficients, so its size relative to the field is
    exactly ``rel``.  Squares are picked among the larger ones.
    """
    rng = _rng(seed)
    if field is None:
        field = TamperField(rng.choice([f.value for f in TamperField]))
    out = copy.copy(cert)
    if field is TamperField.SQUARE:
        k = _largest(cert.squares, rng)
        out.squares = list(cert.squares)
        out.squares[k] = _bump(cert.squares[k], rng, rel)
    elif field is TamperField.QMULT_SQUARE:
        k = _largest(cert.qmult_squares, rng)
        out.qmult_squares = list(cert.qmult_squares)
        out.qmult_squares[k] = _bump(cert.qmult_squares[k], rng, rel)
    elif field is TamperField.QMULT:
        out.qmult = _bump(cert.qmult, rng, rel)
    elif field is TamperField.P:
        out.p = _bump(cert.p, rng, rel)
    elif field is TamperField.INPUT:
        out.f = _bump(cert.f, rng, rel)
    elif field is TamperField.TRANSFORM:
        M = np.array(cert.transform.matrix)
        i, j = rng.integers(0, M.shape[0], size=2)
        M[i, j] += rel * float(rng.choice([-1.0, 1.0]))
        out.transform = _RawMap(M)
    out.factors = [Factor(fac.name, fac.poly, list(fac.squares)) for fac in cert.factors]
    return out, field
