"""Dense primal-dual interior-point solver for small block SDPs.

Problems are stated in primal form over block-diagonal symmetric X::

    sum_b <A[i, b], X_b> = c_i      for every constraint i
    X_b  PSD                        for every block b

either as an optimization (maximize ``sum_b <C_b, X_b>``) or, by default, as
the phase-I feasibility problem::

    maximize t   subject to   sum_b <A[i, b], X_b> = c_i,   X_b - t I  PSD

whose optimum decides feasibility.  Phase-I substitutes X_b = Z_b + t I and
keeps t as a free scalar; the Newton system is then the usual Schur complement
bordered by one column for t.  Search directions are HKM with a Mehrotra
predictor-corrector.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NotPsdError, ShapeMismatchError
from .polycore import Exponent, HomogPoly, _product_index, gram_index, monomials, n_monomials

log = logging.getLogger(__name__)

FEASIBLE_T = 1e-9
INFEASIBLE_T = -1e-7
# a stalled solve this close below INFEASIBLE_T is not trusted to be infeasible
UNCONVERGED_BAND = 100.0


class SdpStatus(enum.Enum):
    FEASIBLE = "Feasible"
    MARGINALLY_FEASIBLE = "MarginallyFeasible"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SdpProblem:
    """Block SDP data.

    ``A[b]`` has shape (m, n_b, n_b): slice ``A[b][i]`` is the coefficient
    matrix of constraint i on block b.  ``objective`` (optional) holds one
    symmetric matrix per block and is maximized; without it the problem is
    solved in phase-I form.
    """

    blocks: list[int]
    A: list[np.ndarray]
    rhs: np.ndarray
    objective: list[np.ndarray] | None = None

    def __post_init__(self):
        self.rhs = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        m = self.rhs.size
        if len(self.A) != len(self.blocks):
            raise ShapeMismatchError("one coefficient stack per block is required")
        fixed = []
        for n, Ab in zip(self.blocks, self.A):
            Ab = np.asarray(Ab, dtype=np.float64)
            if Ab.shape != (m, n, n):
                raise ShapeMismatchError(f"coefficient stack has shape {Ab.shape}, expected {(m, n, n)}")
            if np.max(np.abs(Ab - Ab.transpose(0, 2, 1)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Ab), initial=0.0)):
                raise ShapeMismatchError("constraint matrices must be symmetric")
            fixed.append(Ab)
        self.A = fixed
        if self.objective is not None:
            obj = [np.asarray(C, dtype=np.float64) for C in self.objective]
            for n, C in zip(self.blocks, obj):
                if C.shape != (n, n) or np.max(np.abs(C - C.T), initial=0.0) > 1e-12:
                    raise ShapeMismatchError("objective matrices must be symmetric and match the blocks")
            self.objective = obj

    @property
    def m(self) -> int:
        return self.rhs.size

    @classmethod
    def from_constraints(
        cls,
        blocks: Sequence[int],
        constraints: Sequence[tuple[Sequence[np.ndarray | None], float]],
        objective: Sequence[np.ndarray] | None = None,
    ) -> "SdpProblem":
        """Build from a list of (per-block matrices, rhs); ``None`` means a zero block."""
        m = len(constraints)
        A = [np.zeros((m, n, n)) for n in blocks]
        rhs = np.zeros(m)
        for i, (mats, c) in enumerate(constraints):
            rhs[i] = c
            for b, M in enumerate(mats):
                if M is not None:
                    A[b][i] = M
        return cls(list(blocks), A, rhs, None if objective is None else list(objective))


@dataclass
class SdpSolution:
    X: list[np.ndarray]
    lambda_min: list[float]
    residual: float
    status: SdpStatus
    t: float | None = None
    objective: float | None = None
    gap: float = float("nan")
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (SdpStatus.FEASIBLE, SdpStatus.MARGINALLY_FEASIBLE)


@dataclass
class SdpOptions:
    max_iter: int = 100
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    step_fraction: float = 0.98
    regularization: float = 1e-10
    refinement: int = 3
    polish: bool = True
    feasible_t: float = FEASIBLE_T
    infeasible_t: float = INFEASIBLE_T


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX PSD, for PD X."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    W = sla.solve_triangular(L, sla.solve_triangular(L, dX, lower=True).T, lower=True)
    lam = np.linalg.eigvalsh(_sym(W))[0]
    return np.inf if lam >= 0 else -1.0 / lam


class _Core:
    """minimize <C, X> + f.t  s.t.  A(X) + D t = b,  X PSD,  t free."""

    def __init__(self, A, b, C, D, f, opts: SdpOptions):
        self.Af = [Ab.reshape(Ab.shape[0], -1) for Ab in A]
        self.A = A
        self.n = [Ab.shape[1] for Ab in A]
        self.b = b
        self.C = C
        self.D = D
        self.f = f
        self.opts = opts
        self.m = b.size
        self.k = D.shape[1]
        # fixed primal operator [A | D]; its pseudo-inverse repairs the
        # equality defect of each Newton direction
        self.Afull = np.hstack(self.Af + [D])
        self.Apinv = np.linalg.pinv(self.Afull, rcond=1e-13)

    def project(self, dX, dt, rp):
        e = rp - self.Aop(dX) - self.D @ dt
        delta = self.Apinv @ e
        out, pos = [], 0
        for d, n in zip(dX, self.n):
            out.append(d + _sym(delta[pos:pos + n * n].reshape(n, n)))
            pos += n * n
        return out, dt + delta[pos:]

    def Aop(self, X):
        return sum(Af @ Xb.ravel() for Af, Xb in zip(self.Af, X))

    def ATop(self, y):
        return [(y @ Af).reshape(n, n) for Af, n in zip(self.Af, self.n)]

    def solve(self, X0=None, t0=None):
        o = self.opts
        bnorm = 1.0 + np.max(np.abs(self.b), initial=0.0)
        Cnorm = 1.0 + max((np.max(np.abs(Cb), initial=0.0) for Cb in self.C), default=0.0)
        scale = max(
            10.0,
            max(np.sqrt(n) for n in self.n),
            bnorm / (1.0 + min(np.linalg.norm(Af, axis=1).min() if Af.size else 1.0 for Af in self.Af)),
        )
        X = [scale * np.eye(n) for n in self.n] if X0 is None else X0
        S = [max(10.0, Cnorm) * np.eye(n) for n in self.n]
        y = np.zeros(self.m)
        t = np.zeros(self.k) if t0 is None else t0
        ntot = sum(self.n)
        status = "max_iter"
        it = stalls = 0
        info = {}
        short = False
        # phase-I iterates are all primal feasible, so the best t seen is a
        # valid answer even if later iterates drift
        best = None
        for it in range(1, o.max_iter + 1):
            rp = self.b - self.Aop(X) - self.D @ t
            ATy = self.ATop(y)
            Rd = [Cb - Sb - Ay for Cb, Sb, Ay in zip(self.C, S, ATy)]
            rf = self.f - self.D.T @ y
            mu = sum(np.vdot(Xb, Sb) for Xb, Sb in zip(X, S)) / ntot
            pobj = sum(np.vdot(Cb, Xb) for Cb, Xb in zip(self.C, X)) + self.f @ t
            dobj = self.b @ y
            pinf = np.linalg.norm(rp) / bnorm
            dinf = max((np.linalg.norm(R) for R in Rd), default=0.0) / Cnorm + np.linalg.norm(rf)
            gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
            info = dict(pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf, gap=gap, mu=mu)
            log.debug("it %3d pobj %+.6e dobj %+.6e pinf %.1e dinf %.1e gap %.1e mu %.1e", it, pobj, dobj, pinf, dinf, gap, mu)
            if self.k and pinf <= 1e-12 and (best is None or -pobj > best[0]):
                best = (-pobj, [Xb.copy() for Xb in X], y.copy(), [Sb.copy() for Sb in S], t.copy(), dict(info))
            if pinf <= o.feas_tol and dinf <= o.feas_tol and gap <= o.gap_tol:
                status = "optimal"
                break
            if not np.isfinite(pobj) or abs(pobj) > 1e12 or abs(dobj) > 1e12:
                status = "diverged"
                break
            try:
                Sinv = [sla.cho_solve(sla.cho_factor(Sb), np.eye(n)) for Sb, n in zip(S, self.n)]
                M = np.zeros((self.m, self.m))
                for Ab, Af, Xb, Si in zip(self.A, self.Af, X, Sinv):
                    B = np.matmul(np.matmul(Xb, Ab), Si)
                    M += Af @ B.reshape(self.m, -1).T
                M = _sym(M)
                M[np.diag_indices_from(M)] += o.regularization * max(1.0, np.mean(np.diag(M)))
                chol = sla.cho_factor(M)
            except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
                status = "schur_failure"
                info["error"] = str(exc)
                break

            if self.k:
                MD = sla.cho_solve(chol, self.D)
                K = self.D.T @ MD
                K[np.diag_indices_from(K)] += o.regularization

            def bordered(r1, r2):
                My = sla.cho_solve(chol, r1)
                if not self.k:
                    return My, np.zeros(0)
                dt = np.linalg.solve(K, self.D.T @ My - r2)
                return My - MD @ dt, dt

            def direction(sigma_mu, corr):
                Rc = []
                for Xb, Si, Rb, cb in zip(X, Sinv, Rd, corr):
                    R = sigma_mu * Si - Xb - Xb @ Rb @ Si
                    if cb is not None:
                        R = R - cb
                    Rc.append(R)
                h = rp - self.Aop(Rc)
                dy, dt = bordered(h, rf)
                # iterative refinement: the equality defect of dX is exactly
                # the residual of the (unregularized) Schur system
                for _ in range(o.refinement + 1):
                    ATdy = self.ATop(dy)
                    dX = [_sym(R + Xb @ Ad @ Si) for R, Xb, Ad, Si in zip(Rc, X, ATdy, Sinv)]
                    e1 = rp - self.Aop(dX) - self.D @ dt
                    e2 = rf - self.D.T @ dy
                    if max(np.linalg.norm(e1), np.linalg.norm(e2)) <= 1e-15 * (1.0 + np.linalg.norm(h)):
                        break
                    ddy, ddt = bordered(e1, e2)
                    dy, dt = dy + ddy, dt + ddt
                dS = [Rb - Ad for Rb, Ad in zip(Rd, ATdy)]
                dX, dt = self.project(dX, dt, rp)
                return dX, dy, dS, dt

            def steps(dX, dS):
                ap = min([1.0] + [o.step_fraction * _max_step(Xb, d) for Xb, d in zip(X, dX)])
                ad = min([1.0] + [o.step_fraction * _max_step(Sb, d) for Sb, d in zip(S, dS)])
                return ap, ad

            try:
                dXa, dya, dSa, dta = direction(0.0, [None] * len(X))
                apa, ada = steps(dXa, dSa)
                mu_aff = sum(np.vdot(Xb + apa * a, Sb + ada * c) for Xb, a, Sb, c in zip(X, dXa, S, dSa)) / ntot
                sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
                corr = [dx @ ds @ Si for dx, ds, Si in zip(dXa, dSa, Sinv)]
                if short:
                    # the last step was blocked: recentre before pushing on
                    sigma = max(sigma, 0.5)
                    corr = [None] * len(X)
                dX, dy, dS, dt = direction(sigma * mu, corr)
                ap, ad = steps(dX, dS)
                log.debug("    sigma %.2e  ap %.2e  ad %.2e  (aff %.2e %.2e)", sigma, ap, ad, apa, ada)
            except np.linalg.LinAlgError as exc:
                status = "step_failure"
                info["error"] = str(exc)
                break
            X = [Xb + ap * d for Xb, d in zip(X, dX)]
            S = [Sb + ad * d for Sb, d in zip(S, dS)]
            y = y + ad * dy
            t = t + ap * dt
            short = min(ap, ad) < 0.1
            stalls = stalls + 1 if min(ap, ad) < 1e-4 else 0
            if stalls >= 3:
                status = "stalled"
                break
        if self.k and status != "optimal":
            # re-measure the final iterate before comparing it with the best one
            rp = self.b - self.Aop(X) - self.D @ t
            final = -(sum(np.vdot(Cb, Xb) for Cb, Xb in zip(self.C, X)) + self.f @ t)
            if best is not None and (np.linalg.norm(rp) / bnorm > 1e-12 or best[0] > final):
                _, X, y, S, t, kept = best
                info = dict(kept)
                info["returned"] = "best_iterate"
        info["status"] = status
        info["iterations"] = it
        return X, y, S, t, info


def _constraint_residual(p: SdpProblem, X: list[np.ndarray]) -> float:
    val = sum(Ab.reshape(p.m, -1) @ Xb.ravel() for Ab, Xb in zip(p.A, X))
    return float(np.max(np.abs(val - p.rhs), initial=0.0))


def _clamped(X: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for Xb in X:
        w, V = np.linalg.eigh(_sym(Xb))
        out.append((V * np.clip(w, 0.0, None)) @ V.T)
    return out


def polish_face(p: SdpProblem, X: list[np.ndarray], min_gap: float = 1e2) -> list[np.ndarray] | None:
    """Snap a nearly-optimal X onto the face spanned by its dominant eigenvectors.

    For candidate cuts in the spectrum (largest gaps first), restrict every
    block to X_b = V_b Y_b V_b^T and correct Y by a (truncated) least-squares
    solution of the affine constraints.  Returns the PSD candidate with the
    smallest constraint residual if it beats simply clamping X, else None.
    """
    eig = [np.linalg.eigh(_sym(Xb)) for Xb in X]
    top = max(max((abs(w[-1]) for w, _ in eig if w.size), default=0.0), 1e-300)
    vals = np.sort(np.concatenate([np.clip(w, 0.0, None) for w, _ in eig]) / top)
    cuts = []
    for lo, hi in zip(vals[:-1], vals[1:]):
        lo = max(lo, 1e-16)
        if hi > 1e-10 and hi >= min_gap * lo:
            cuts.append((hi / lo, np.sqrt(hi * lo)))
    cuts.sort(reverse=True)
    best_res, best = _constraint_residual(p, _clamped(X)), None
    for _, cut in cuts[:4]:
        Vs = [V[:, w > cut * top] for w, V in eig]
        Bfull = np.hstack([np.einsum("ia,mij,jb->mab", V, Ab, V).reshape(p.m, -1) for V, Ab in zip(Vs, p.A)])
        if Bfull.shape[1] == 0:
            continue
        y0 = np.concatenate([(V.T @ Xb @ V).ravel() for V, Xb in zip(Vs, X)])
        defect = p.rhs - Bfull @ y0
        for rcond in (1e-13, 1e-10, 1e-8, 1e-6):
            delta, *_ = np.linalg.lstsq(Bfull, defect, rcond=rcond)
            y = y0 + delta
            out, pos, psd = [], 0, True
            for V in Vs:
                k = V.shape[1]
                Y = _sym(y[pos:pos + k * k].reshape(k, k))
                pos += k * k
                if k and np.linalg.eigvalsh(Y)[0] < 0.0:
                    psd = False
                    break
                out.append(_sym(V @ Y @ V.T))
            if not psd:
                continue
            res = _constraint_residual(p, out)
            if res < best_res:
                best_res, best = res, out
    return best


def _phase1_start(p: SdpProblem):
    """Strictly feasible phase-I point: min-norm solution of A(X) = c, shifted."""
    Af = np.hstack([Ab.reshape(p.m, -1) for Ab in p.A])
    x, *_ = np.linalg.lstsq(Af, p.rhs, rcond=None)
    X, pos = [], 0
    for n in p.blocks:
        X.append(_sym(x[pos:pos + n * n].reshape(n, n)))
        pos += n * n
    lam = min(_lambda_min(Xb) for Xb in X)
    spread = max(1.0, max(np.max(np.abs(Xb), initial=0.0) for Xb in X))
    t0 = lam - spread
    return [Xb - t0 * np.eye(n) for Xb, n in zip(X, p.blocks)], np.array([t0])


def _lambda_min(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_sym(M))[0]) if M.size else 0.0


def solve(p: SdpProblem, opts: SdpOptions | None = None) -> SdpSolution:
    """Solve ``p``; phase-I when it has no objective, optimization otherwise."""
    opts = opts or SdpOptions()
    phase1 = p.objective is None
    if phase1:
        d = sum(np.trace(Ab, axis1=1, axis2=2) for Ab in p.A).reshape(-1, 1)
        C = [np.zeros((n, n)) for n in p.blocks]
        core = _Core(p.A, p.rhs, C, d, np.array([-1.0]), opts)
        Z0, t0 = _phase1_start(p)
        Z, y, S, t, info = core.solve(Z0, t0)
    else:
        C = [-Cb for Cb in p.objective]
        core = _Core(p.A, p.rhs, C, np.zeros((p.m, 0)), np.zeros(0), opts)
        Z, y, S, t, info = core.solve()
    tval = float(t[0]) if phase1 else None
    X = [Zb + tval * np.eye(n) for Zb, n in zip(Z, p.blocks)] if phase1 else Z
    X = [_sym(Xb) for Xb in X]
    res = float(np.max(np.abs(core.Aop(X) - p.rhs), initial=0.0))
    rhs_scale = 1.0 + np.max(np.abs(p.rhs), initial=0.0)
    diagnostics = dict(info)
    # t* = 0 exactly when the feasible set has no interior; a solve that
    # stalls on such a problem can end slightly below infeasible_t
    unsure = phase1 and info["status"] != "optimal" and UNCONVERGED_BAND * opts.infeasible_t < tval <= opts.infeasible_t
    if opts.polish and phase1 and (unsure or opts.infeasible_t < tval < opts.feasible_t):
        # marginal: the iterate sits next to a face with tiny negative eigenvalues
        polished = polish_face(p, X)
        if polished is not None:
            pres = _constraint_residual(p, polished)
            if pres <= 1e-8 * rhs_scale:
                X, res = polished, pres
                diagnostics["polished"] = True
    lam = [_lambda_min(Xb) for Xb in X]
    rel_res = res / rhs_scale
    diagnostics["dual_bound"] = -float(info.get("dobj", np.nan)) if phase1 else None
    log.debug("sdp solve: %s", diagnostics)

    if rel_res > 1e-6:
        # phase-I starts primal feasible, so a residual here means the affine
        # constraints themselves are inconsistent (or the solve broke down)
        failed = info["status"] in ("schur_failure", "step_failure")
        status = SdpStatus.NUMERICAL_FAILURE if failed else SdpStatus.INFEASIBLE
    elif phase1:
        if tval >= opts.feasible_t:
            status = SdpStatus.FEASIBLE
        elif tval > opts.infeasible_t or unsure:
            status = SdpStatus.MARGINALLY_FEASIBLE
        else:
            status = SdpStatus.INFEASIBLE
    else:
        trace_scale = max(1.0, max((np.trace(Xb) for Xb in X), default=1.0))
        if info["status"] == "diverged":
            status = SdpStatus.INFEASIBLE
        elif info["status"] in ("schur_failure", "step_failure"):
            status = SdpStatus.NUMERICAL_FAILURE
        elif min(lam, default=0.0) >= -1e-9 * trace_scale and rel_res <= 1e-8:
            status = SdpStatus.FEASIBLE
        else:
            status = SdpStatus.MARGINALLY_FEASIBLE
    obj = None if phase1 else float(sum(np.vdot(Cb, Xb) for Cb, Xb in zip(p.objective, X)))
    return SdpSolution(
        X=X,
        lambda_min=lam,
        residual=rel_res,
        status=status,
        t=tval,
        objective=obj,
        gap=float(info.get("gap", np.nan)),
        iterations=int(info["iterations"]),
        diagnostics=diagnostics,
    )


def psd_factor(G, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-factor a PSD matrix: returns (weights, vectors) with G ~ sum w_i v_i v_i^T.

    Eigenvalues in [-eps, 0] are clamped to zero and dropped; anything more
    negative raises :class:`NotPsdError`.
    """
    G = _sym(np.asarray(G, dtype=np.float64))
    lam, V = np.linalg.eigh(G)
    if lam.size and lam[0] < -eps:
        raise NotPsdError(f"matrix is not PSD: smallest eigenvalue {lam[0]:.3e} < -{eps:.1e}")
    keep = lam > 0
    return lam[keep][::-1], V[:, keep][:, ::-1]


def extract_squares(G, basis: Sequence[Exponent], eps: float = 1e-9) -> list[HomogPoly]:
    """Explicit squares r_i = sqrt(lambda_i) * (v_i . m(X)) with sum r_i^2 = m^T G m."""
    basis = [tuple(e) for e in basis]
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (len(basis), len(basis)):
        raise ShapeMismatchError("Gram matrix does not match the basis")
    nvars, deg = len(basis[0]), sum(basis[0])
    lam, V = psd_factor(G, eps)
    full = monomials(nvars, deg)
    pos = {e: i for i, e in enumerate(full)}
    out = []
    for w, v in zip(lam, V.T):
        c = np.zeros(len(full))
        for e, coef in zip(basis, v):
            c[pos[e]] += np.sqrt(w) * coef
        out.append(HomogPoly(nvars, deg, c))
    return out


def gram_stack(basis: Sequence[Exponent], multiplier: HomogPoly | None = None) -> np.ndarray:
    """Coefficient-matching matrices for a Gram block.

    Returns A with shape (n_target, len(basis), len(basis)) such that
    ``<A[k], G>`` is the k-th coefficient of ``multiplier * (m^T G m)`` (or of
    ``m^T G m`` itself when ``multiplier`` is None).
    """
    basis = tuple(tuple(int(v) for v in e) for e in basis)
    nvars, d = len(basis[0]), sum(basis[0])
    idx = gram_index(basis)
    nb = len(basis)
    rows, cols = np.indices((nb, nb))
    if multiplier is None:
        A = np.zeros((n_monomials(nvars, 2 * d), nb, nb))
        A[idx, rows, cols] = 1.0
        return A
    if multiplier.nvars != nvars:
        raise ShapeMismatchError("multiplier and basis live in different rings")
    target = n_monomials(nvars, 2 * d + multiplier.degree)
    prod = _product_index(nvars, 2 * d, multiplier.degree)
    A = np.zeros((target, nb, nb))
    for k, c in enumerate(multiplier.coeffs):
        if c:
            np.add.at(A, (prod[idx, k], rows, cols), c)
    return A
