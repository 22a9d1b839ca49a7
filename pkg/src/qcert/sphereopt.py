"""Minimizing a form on the unit sphere and classifying the minimum."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ShapeMismatchError
from .polycore import HomogPoly, diff, evaluate, monomial_values

TAU_ZERO = 1e-8
COARSE_TOL = 1e-4
COARSE_ITERS = 300
DEFAULT_SEED = 0


class Classification(enum.Enum):
    ZERO_ON_SPHERE = "ZeroOnSphere"
    POSITIVE_MIN = "PositiveMin"
    NEGATIVE_SOMEWHERE = "NegativeSomewhere"


@dataclass
class MinResult:
    xstar: np.ndarray
    value: float
    grad_tangent_norm: float
    classification: Classification
    coeff_scale: float = 1.0
    starts: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def normalized_value(self) -> float:
        """Minimum of f / max|coeff(f)| on the sphere."""
        return self.value / self.coeff_scale if self.coeff_scale else self.value


class _Derivatives:
    """Gradient and Hessian of a fixed form, evaluated at batches of points."""

    def __init__(self, f: HomogPoly):
        self.f = f
        self.n = f.nvars
        self.grad_polys = [diff(f, i) for i in range(self.n)]
        self.G = np.array([g.coeffs for g in self.grad_polys])
        self.H = np.array([[diff(g, j).coeffs for j in range(self.n)] for g in self.grad_polys])

    def value(self, X: np.ndarray) -> np.ndarray:
        return monomial_values(X, self.n, self.f.degree) @ self.f.coeffs

    def grad(self, X: np.ndarray) -> np.ndarray:
        return monomial_values(X, self.n, self.f.degree - 1) @ self.G.T

    def hess(self, x: np.ndarray) -> np.ndarray:
        if self.f.degree < 2:
            return np.zeros((self.n, self.n))
        return self.H @ monomial_values(x, self.n, self.f.degree - 2)


def _tangent(X: np.ndarray, G: np.ndarray) -> np.ndarray:
    return G - np.sum(G * X, axis=1, keepdims=True) * X


def _normalize(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=-1, keepdims=True)


def start_points(nvars: int, n_random: int, seed: int) -> np.ndarray:
    """Signed coordinate vectors followed by seeded uniform points on the sphere."""
    eye = np.eye(nvars)
    rng = np.random.default_rng(seed)
    rand = _normalize(rng.standard_normal((n_random, nvars))) if n_random else np.zeros((0, nvars))
    return np.vstack([eye, -eye, rand])


def _gradient_phase(d: _Derivatives, X: np.ndarray, max_iter: int, tol: float) -> np.ndarray:
    X = X.copy()
    step = np.ones(len(X))
    active = np.ones(len(X), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = X[idx]
        fa = d.value(Xa)
        Ga = _tangent(Xa, d.grad(Xa))
        gn2 = np.sum(Ga * Ga, axis=1)
        done = np.sqrt(gn2) <= tol
        active[idx[done]] = False
        keep = ~done
        idx, Xa, fa, Ga, gn2 = idx[keep], Xa[keep], fa[keep], Ga[keep], gn2[keep]
        alpha = np.minimum(step[idx] * 2.0, 1e3)
        accepted = np.zeros(idx.size, dtype=bool)
        newX = Xa.copy()
        for _ in range(60):
            pending = ~accepted
            if not pending.any():
                break
            trial = _normalize(Xa[pending] - alpha[pending, None] * Ga[pending])
            ok = d.value(trial) <= fa[pending] - 1e-4 * alpha[pending] * gn2[pending]
            sel = np.flatnonzero(pending)
            newX[sel[ok]] = trial[ok]
            accepted[sel[ok]] = True
            alpha[sel[~ok]] *= 0.5
        # no Armijo decrease at machine precision: the start is as good as it gets
        active[idx[~accepted]] = False
        X[idx] = newX
        step[idx] = alpha
    return X


def _newton_polish(d: _Derivatives, x: np.ndarray, iters: int, tol: float) -> tuple[np.ndarray, float]:
    """Riemannian Newton on the sphere, guarded so the value never increases."""
    n = len(x)
    fx = float(d.value(x[None])[0])
    for _ in range(iters):
        g = d.grad(x[None])[0]
        P = np.eye(n) - np.outer(x, x)
        rg = P @ g
        if np.linalg.norm(rg) <= tol * 1e-3:
            break
        Hr = P @ d.hess(x) @ P - float(x @ g) * P
        # restrict to the tangent space via an orthonormal basis of x-perp
        B = np.linalg.svd(P)[0][:, : n - 1]
        Ht = B.T @ Hr @ B
        w, V = np.linalg.eigh(Ht)
        # floor the curvature: singular (flat) minima still get a descent step
        w = np.maximum(w, 1e-12 + 1e-8 * np.max(np.abs(w)))
        v = -B @ (V @ ((V.T @ (B.T @ rg)) / w))
        accepted = False
        for _ in range(30):
            trial = x + v
            trial /= np.linalg.norm(trial)
            ft = float(d.value(trial[None])[0])
            if ft <= fx + 1e-15 * max(1.0, abs(fx)):
                x, fx, accepted = trial, ft, True
                break
            v *= 0.5
        if not accepted:
            break
    g = d.grad(x[None])[0]
    return x, float(np.linalg.norm(g - (x @ g) * x))


def classify(result: MinResult | float, tau_zero: float = TAU_ZERO) -> Classification:
    """Sign class of a (normalized) sphere minimum."""
    value = result.normalized_value if isinstance(result, MinResult) else float(result)
    if value < -tau_zero:
        return Classification.NEGATIVE_SOMEWHERE
    if value <= tau_zero:
        return Classification.ZERO_ON_SPHERE
    return Classification.POSITIVE_MIN


def min_on_sphere(
    f: HomogPoly,
    n_starts: int = 32,
    max_iter: int = 2000,
    tol: float = 1e-9,
    seed: int = DEFAULT_SEED,
    tau_zero: float = TAU_ZERO,
    newton_iters: int = 100,
) -> MinResult:
    """Multistart minimization of f over the unit sphere.

    The first ``2 * nvars`` starts are the signed coordinate vectors; the rest
    are seeded uniform points.  ``tol`` bounds the tangential gradient of the
    coefficient-normalized form.  Among converged starts the least value
    wins; values equal to within 1e-14 are broken by the lexicographically
    smallest point.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    if f.degree < 1:
        raise ShapeMismatchError("cannot minimize a constant on the sphere")
    scale = f.norm_inf()
    if scale == 0.0:
        x = np.zeros(f.nvars)
        x[0] = 1.0
        return MinResult(x, 0.0, 0.0, Classification.ZERO_ON_SPHERE, 1.0, 1)
    g = f * (1.0 / scale)
    d = _Derivatives(g)
    n_coord = min(2 * f.nvars, n_starts)
    X0 = start_points(f.nvars, max(n_starts - 2 * f.nvars, 0), seed)[:n_starts]
    if n_starts < 2 * f.nvars:
        X0 = X0[:n_coord]
    # gradient steps only need to reach Newton's basin
    X = _gradient_phase(d, X0, min(max_iter, COARSE_ITERS), max(tol, COARSE_TOL))

    candidates = []
    for x in X:
        xp, gn = _newton_polish(d, x, newton_iters, tol)
        candidates.append((float(d.value(xp[None])[0]), xp, gn))

    converged = [c for c in candidates if c[2] <= tol]
    pool = converged or candidates
    best_val = min(c[0] for c in pool)
    tied = [c for c in pool if c[0] <= best_val + 1e-14 * max(1.0, abs(best_val))]
    tied.sort(key=lambda c: tuple(c[1]))
    val, xstar, gn = tied[0]
    xstar = xstar / np.linalg.norm(xstar)
    value = float(evaluate(f, xstar))
    result = MinResult(
        xstar=xstar,
        value=value,
        grad_tangent_norm=gn,
        classification=Classification.ZERO_ON_SPHERE,
        coeff_scale=scale,
        starts=len(X0),
        history=[(c[0], c[2]) for c in candidates],
    )
    result.classification = classify(result, tau_zero)
    if not converged and result.classification is not Classification.NEGATIVE_SOMEWHERE:
        raise ConvergenceError(
            f"no start reached tangential gradient <= {tol:g} (best {gn:.2e})", best=result
        )
    return result
