"""Orthogonal reduction of a quartic to X0-graded normal form.

After rotating the sphere minimizer x* to e0, a nonnegative quartic reads

    f = c0 X0^4 + f2 X0^2 + f3 X0 + f4,          f_k ternary of degree k

with c0 = 0 if f vanishes at x*, and c0 = 1 after scaling the minimum to 1
otherwise (the X0^3 coefficient vanishes because x* is a stationary point).
The part certified downstream is g = f2 X0^2 + f3 X0 + f4, for which

    4 f2 g = (2 f2 X0 + f3)^2 + h,    h = 4 f2 f4 - f3^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ReductionError, RejectedInputError
from .polycore import (
    HomogPoly,
    OrthoMap,
    apply_map,
    assemble_x0,
    lift,
    mul,
    quadratic_gram,
    slice_x0,
    x0_power,
)
from .sphereopt import Classification, MinResult

F1_TOL = 1e-5
UNIT_TOL = 1e-12


@dataclass(frozen=True)
class ReducedQuartic:
    f2: HomogPoly
    f3: HomogPoly
    f4: HomogPoly
    c0: float
    scale: float
    map: OrthoMap
    f1_residual: float
    positive: bool
    c0_measured: float = 0.0

    @property
    def g(self) -> HomogPoly:
        """f2 X0^2 + f3 X0 + f4 as a 4-variable quartic."""
        return assemble_x0(0.0, HomogPoly.zero(3, 1), self.f2, self.f3, self.f4)

    @property
    def form(self) -> HomogPoly:
        """The reduced quartic that the certificate targets (c0 X0^4 + g)."""
        return self.g + x0_power(4) * self.c0


def householder_to_e0(xstar) -> OrthoMap:
    """Orthogonal Q (a reflection, or I) with Q @ xstar = e0."""
    x = np.asarray(xstar, dtype=np.float64)
    if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
        raise ValueError(f"householder_to_e0 needs a unit vector (norm {np.linalg.norm(x):.15f})")
    e0 = np.zeros_like(x)
    e0[0] = 1.0
    v = x - e0
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return OrthoMap.identity(len(x))
    v /= nv
    return OrthoMap(np.eye(len(x)) - 2.0 * np.outer(v, v))


def to_reduced(f: HomogPoly, min_result: MinResult) -> ReducedQuartic:
    """Bring f to normal form using the sphere minimizer in ``min_result``."""
    if min_result.classification is Classification.NEGATIVE_SOMEWHERE:
        raise RejectedInputError(min_result.xstar, min_result.value)
    if f.nvars != 4 or f.degree != 4:
        raise ReductionError("reduction is implemented for 4-variable quartics")
    positive = min_result.classification is Classification.POSITIVE_MIN
    if positive:
        scale = 1.0 / min_result.value
    else:
        scale = 1.0 / f.norm_inf()
    Q = householder_to_e0(min_result.xstar)
    F = apply_map(f * scale, Q)
    c0, f1, f2, f3, f4 = slice_x0(F)
    f1_residual = f1.norm_inf() / F.norm_inf()
    if f1_residual > F1_TOL:
        raise ReductionError(
            f"X0^3 coefficient {f1_residual:.2e} too large; the sphere minimizer is inaccurate"
        )
    return ReducedQuartic(
        f2=f2,
        f3=f3,
        f4=f4,
        c0=1.0 if positive else 0.0,
        scale=scale,
        map=Q,
        f1_residual=f1_residual,
        positive=positive,
        c0_measured=c0,
    )


def sextic_h(red: ReducedQuartic) -> HomogPoly:
    """h = 4 f2 f4 - f3^2 (ternary sextic)."""
    return mul(red.f2, red.f4) * 4.0 - mul(red.f3, red.f3)


def f2_rank(red: ReducedQuartic | HomogPoly, eps: float = 1e-8, neg_tol: float = 1e-8):
    """Numerical rank of f2's Gram matrix and, for rank 1, the form l with f2 = l^2.

    Returns ``(rank, l)``; ``l`` is None unless the rank is exactly 1.
    Raises :class:`ReductionError` when f2 is indefinite beyond ``neg_tol``
    (relative), which means the reduction did not start from a true minimum
    of a nonnegative form.
    """
    f2 = red.f2 if isinstance(red, ReducedQuartic) else red
    A = quadratic_gram(f2)
    lam, V = np.linalg.eigh(A)
    top = max(abs(lam[-1]), abs(lam[0]))
    if top == 0.0:
        return 0, None
    if lam[0] < -neg_tol * max(1.0, top):
        raise ReductionError(f"f2 is indefinite (eigenvalue {lam[0]:.2e}); upstream reduction failed")
    rank = int(np.sum(lam > eps * lam[-1]))
    ell = None
    if rank == 1:
        ell = HomogPoly.linear(np.sqrt(lam[-1]) * V[:, -1])
    return rank, ell


def lifted_parts(red: ReducedQuartic) -> tuple[HomogPoly, HomogPoly, HomogPoly]:
    """f2, f3, f4 embedded in X0..X3 (no X0 dependence)."""
    return lift(red.f2), lift(red.f3), lift(red.f4)
