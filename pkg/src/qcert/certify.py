"""Constructing certificates qmult * f = sum r_k^2 for nonnegative quartics.

Three routes:

* ``SosFastPath`` -- f is itself a sum of squares; qmult = (sum x_i^2)^2.
* ``Structured`` -- rotate the sphere minimizer to e0, complete the square in
  X0 and clear the remaining ternary sextic h with a quadratic multiplier:
  qmult = 4 * q2 * f2.
* ``Direct`` -- one SDP for the Gram matrices of a quartic multiplier and of
  the degree-8 product.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .certificate import Certificate, Factor, Method
from .errors import (
    AssemblyError,
    CertificationError,
    DirectRouteError,
    HilbertStepError,
    NotPsdError,
    PullBackError,
    QcertError,
    ReductionError,
    RejectedInputError,
)
from .polycore import (
    HomogPoly,
    OrthoMap,
    apply_map,
    evaluate,
    from_gram,
    lift,
    monomials,
    mul,
    quadratic_gram,
    sphere_form,
    sum_of_squares,
    x0_power,
)
from .reduce import ReducedQuartic, f2_rank, sextic_h, to_reduced
from .sdp import SdpProblem, SdpStatus, extract_squares, gram_stack, solve
from .sphereopt import Classification, TAU_ZERO, min_on_sphere
from .verify import DEFAULT_TOL, SosStatus, sos_check, sphere_samples, verify_certificate

log = logging.getLogger(__name__)

ASSEMBLY_TOL = 1e-7
PSD_EPS = 1e-6
H_ZERO_TOL = 1e-13


class Route(enum.Enum):
    AUTO = "auto"
    STRUCTURED = "structured"
    DIRECT = "direct"


@dataclass
class CertifyOptions:
    method: Route = Route.AUTO
    tol: float = DEFAULT_TOL
    assembly_tol: float = ASSEMBLY_TOL
    tau_zero: float = TAU_ZERO
    seed: int = 0
    n_starts: int = 32
    negativity_samples: int = 2000


@dataclass
class HilbertResult:
    q2: HomogPoly
    q2_gram: np.ndarray
    u: HomogPoly
    u_gram: np.ndarray
    status: SdpStatus
    h_scale: float = 1.0

    def q2_squares(self) -> list[HomogPoly]:
        return extract_squares(self.q2_gram, monomials(3, 1), PSD_EPS * max(1.0, _absmax(self.q2_gram)))

    def u_squares(self) -> list[HomogPoly]:
        if not np.any(self.u_gram):
            return []
        return extract_squares(self.u_gram, monomials(3, 4), PSD_EPS * max(1.0, _absmax(self.u_gram)))


def _absmax(M) -> float:
    return float(np.max(np.abs(M))) if np.size(M) else 0.0


def _multiplier_problem(target: HomogPoly, mult_degree: int, trace: float) -> SdpProblem:
    """Phase-I data for: q (Gram over degree-mult_degree/2 monomials) times target is sos.

    Blocks: Gram(q), Gram(q * target).  Constraints match every coefficient of
    q * target against the Gram expansion, plus trace Gram(q) = trace.
    """
    n = target.nvars
    qbasis = monomials(n, mult_degree // 2)
    pbasis = monomials(n, (mult_degree + target.degree) // 2)
    Aq = gram_stack(qbasis, target)
    Ap = -gram_stack(pbasis)
    m = Aq.shape[0]
    Aq = np.concatenate([Aq, np.eye(len(qbasis))[None]], axis=0)
    Ap = np.concatenate([Ap, np.zeros((1, len(pbasis), len(pbasis)))], axis=0)
    rhs = np.zeros(m + 1)
    rhs[-1] = trace
    return SdpProblem([len(qbasis), len(pbasis)], [Aq, Ap], rhs)


def hilbert_multiplier(h: HomogPoly) -> HilbertResult:
    """Quadratic sos q2 with q2 * h = u sos, for a nonnegative ternary sextic h.

    trace Gram(q2) is pinned to 3 so q2 = X1^2 + X2^2 + X3^2 is admissible.
    """
    if h.nvars != 3 or h.degree != 6:
        raise HilbertStepError("hilbert_multiplier expects a ternary sextic")
    q_eye = np.eye(3)
    scale = h.norm_inf()
    if scale <= H_ZERO_TOL:
        return HilbertResult(from_gram(q_eye, monomials(3, 1)), q_eye, HomogPoly.zero(3, 8), np.zeros((15, 15)), SdpStatus.FEASIBLE, 0.0)
    sol = solve(_multiplier_problem(h * (1.0 / scale), 2, 3.0))
    if not sol.ok:
        raise HilbertStepError(f"multiplier SDP for h returned {sol.status.value} (t* = {sol.t:.3e})")
    Gq, Gu = sol.X[0], sol.X[1] * scale
    q2 = from_gram(Gq, monomials(3, 1))
    return HilbertResult(q2, Gq, from_gram(Gu, monomials(3, 4)), Gu, sol.status, scale)


def _relative(diff: HomogPoly, ref: HomogPoly) -> float:
    denom = ref.norm_inf()
    return diff.norm_inf() / denom if denom > 0 else float("inf")


def _f2_squares(red: ReducedQuartic) -> list[HomogPoly]:
    A = quadratic_gram(red.f2)
    return extract_squares(A, monomials(3, 1), PSD_EPS * max(1.0, _absmax(A)))


def _structured(red: ReducedQuartic, q2_squares, u_squares, with_x0_term: bool, tol: float) -> Certificate:
    a = [lift(s) for s in q2_squares]
    b = [lift(s) for s in _f2_squares(red)]
    if not b:
        raise AssemblyError("f2 vanishes; the structured route does not apply")
    f2, f3 = lift(red.f2), lift(red.f3)
    x0 = x0_power(1)
    completed = mul(f2, x0) * 2.0 + f3  # 2 f2 X0 + f3
    squares = [mul(aj, completed) for aj in a]
    squares += [lift(s) for s in u_squares]
    if with_x0_term:
        x02 = x0_power(2)
        squares += [mul(mul(aj, bi), x02) * 2.0 for aj in a for bi in b]
    q2 = sum_of_squares(a, 4, 2)
    f2_sos = sum_of_squares(b, 4, 2)
    qmult = mul(q2, f2) * 4.0
    target = red.form
    p = sum_of_squares(squares, 4, 8)
    cert = Certificate(
        f=target,
        qmult=qmult,
        qmult_squares=[mul(aj, bi) * 2.0 for aj in a for bi in b],
        p=p,
        squares=squares,
        method=Method.STRUCTURED,
        factors=[Factor("q2", q2, a), Factor("f2", f2_sos, b)],
        factor_scale=4.0,
    )
    cert.residual = cert.identity_residual()
    if not cert.residual <= tol:
        raise AssemblyError(f"structured identity residual {cert.residual:.2e} exceeds {tol:g}", cert.residual)
    return cert


def assemble_zero_case(red: ReducedQuartic, q2_squares, u_squares, tol: float = ASSEMBLY_TOL) -> Certificate:
    """4 q2 f2 g = sum_j (a_j (2 f2 X0 + f3))^2 + u, in reduced coordinates."""
    if red.positive:
        raise AssemblyError("assemble_zero_case called on a positive-case reduction")
    return _structured(red, q2_squares, u_squares, False, tol)


def assemble_positive_case(red: ReducedQuartic, q2_squares, u_squares, tol: float = ASSEMBLY_TOL) -> Certificate:
    """As the zero case for g = f - X0^4, plus squares 2 a_j b_i X0^2 for qmult * X0^4."""
    if not red.positive:
        raise AssemblyError("assemble_positive_case called on a zero-case reduction")
    return _structured(red, q2_squares, u_squares, True, tol)


def pull_back(cert: Certificate, red: ReducedQuartic, f: HomogPoly, tol: float = DEFAULT_TOL) -> Certificate:
    """Undo the reduction: rotate back and unscale, then re-measure against f."""
    back = red.map.inverse()

    def rot(g: HomogPoly) -> HomogPoly:
        return apply_map(g, back)

    # red.form = apply_map(s f, Q)  =>  qmult f = p / s in original coordinates
    root = 1.0 / np.sqrt(red.scale)
    out = Certificate(
        f=f,
        qmult=rot(cert.qmult),
        qmult_squares=[rot(s) for s in cert.qmult_squares],
        p=rot(cert.p) * (1.0 / red.scale),
        squares=[rot(r) * root for r in cert.squares],
        method=cert.method,
        transform=red.map,
        scale=red.scale,
        factors=[Factor(fac.name, rot(fac.poly), [rot(s) for s in fac.squares]) for fac in cert.factors],
        factor_scale=cert.factor_scale,
        qmult_gram=cert.qmult_gram,
        p_gram=cert.p_gram,
        tolerances=dict(cert.tolerances),
        notes=dict(cert.notes),
    )
    # p is re-expanded from the rotated squares so that it is exactly their sum
    out.p = sum_of_squares(out.squares, 4, 8)
    out.residual = out.identity_residual()
    if not out.residual <= tol:
        raise PullBackError(f"pulled-back residual {out.residual:.2e} exceeds {tol:g}", out.residual)
    return out


def direct_certificate(f: HomogPoly, tol: float = DEFAULT_TOL) -> Certificate:
    """Single SDP for Gram(q) (10x10) and Gram(q f) (35x35), trace Gram(q) = 10."""
    if f.nvars != 4 or f.degree != 4:
        raise DirectRouteError("direct route expects a 4-variable quartic")
    scale = f.norm_inf()
    sol = solve(_multiplier_problem(f * (1.0 / scale), 4, 10.0))
    if not sol.ok:
        raise DirectRouteError(f"direct SDP returned {sol.status.value} (t* = {sol.t:.3e})")
    Gq, Gp = sol.X[0], sol.X[1] * scale
    try:
        qsq = extract_squares(Gq, monomials(4, 2), PSD_EPS * max(1.0, _absmax(Gq)))
        psq = extract_squares(Gp, monomials(4, 4), PSD_EPS * max(1.0, _absmax(Gp)))
    except NotPsdError as exc:
        raise DirectRouteError(str(exc)) from exc
    qmult = sum_of_squares(qsq, 4, 4)
    cert = Certificate(
        f=f,
        qmult=qmult,
        qmult_squares=qsq,
        p=sum_of_squares(psq, 4, 8),
        squares=psq,
        method=Method.DIRECT,
        qmult_gram=Gq,
        p_gram=Gp,
        notes={"sdp_status": sol.status.value, "t": sol.t},
    )
    cert.residual = cert.identity_residual()
    if not cert.residual <= tol:
        raise DirectRouteError(f"direct identity residual {cert.residual:.2e} exceeds {tol:g}")
    return cert


def sos_certificate(f: HomogPoly, f_squares: list[HomogPoly]) -> Certificate:
    """Wrap f = sum s_k^2 as qmult = (sum x_i^2)^2, p = qmult f."""
    qsq = []
    for i in range(4):
        for j in range(i, 4):
            e = [0, 0, 0, 0]
            e[i] += 1
            e[j] += 1
            qsq.append(HomogPoly.monomial(e, 1.0 if i == j else np.sqrt(2.0)))
    squares = [mul(m, s) for m in qsq for s in f_squares]
    cert = Certificate(
        f=f,
        qmult=sphere_form(4, 2),
        qmult_squares=qsq,
        p=sum_of_squares(squares, 4, 8),
        squares=squares,
        method=Method.SOS_FAST_PATH,
    )
    cert.residual = cert.identity_residual()
    return cert


def find_negative(f: HomogPoly, n: int, seed: int, tau: float) -> tuple[np.ndarray, float] | None:
    """Cheap sampled search for a point where f/||f|| < -tau."""
    if n <= 0:
        return None
    X = sphere_samples(f.nvars, n, seed)
    vals = evaluate(f, X)
    k = int(np.argmin(vals))
    if vals[k] < -tau * f.norm_inf():
        return X[k], float(vals[k])
    return None


def structured_certificate(f: HomogPoly, opts: CertifyOptions | None = None, min_result=None) -> Certificate:
    """Reduction, multiplier SDP for h, assembly and pull-back."""
    opts = opts or CertifyOptions()
    if min_result is None:
        min_result = min_on_sphere(f, n_starts=opts.n_starts, seed=opts.seed, tau_zero=opts.tau_zero)
    if min_result.classification is Classification.NEGATIVE_SOMEWHERE:
        raise RejectedInputError(min_result.xstar, min_result.value)
    red = to_reduced(f, min_result)
    rank, _ = f2_rank(red)
    if rank == 0:
        raise ReductionError("f2 vanishes after reduction; structured route does not apply")
    hil = hilbert_multiplier(sextic_h(red))
    try:
        q2sq, usq = hil.q2_squares(), hil.u_squares()
    except NotPsdError as exc:
        raise HilbertStepError(str(exc)) from exc
    assemble = assemble_positive_case if red.positive else assemble_zero_case
    local = assemble(red, q2sq, usq, opts.assembly_tol)
    cert = pull_back(local, red, f, opts.tol)
    cert.qmult_gram = None
    cert.notes.update(
        case="positive" if red.positive else "zero",
        f2_rank=rank,
        sphere_min=min_result.value,
        xstar=[float(v) for v in min_result.xstar],
        c0_measured=red.c0_measured,
        f1_residual=red.f1_residual,
        hilbert_status=hil.status.value,
    )
    return cert


def _finalize(cert: Certificate, f: HomogPoly, opts: CertifyOptions) -> Certificate:
    cert.tolerances = {"verify": opts.tol, "assembly": opts.assembly_tol, "tau_zero": opts.tau_zero}
    report = verify_certificate(f, cert, opts.tol)
    if not report.passed:
        raise AssemblyError(f"verification failed: {', '.join(report.failed())}")
    return cert


def certify(f: HomogPoly, opts: CertifyOptions | None = None) -> Certificate:
    """Certificate for a nonnegative 4-variable quartic, verified before return.

    Auto tries the sum-of-squares fast path, then the structured route, then
    the direct SDP.  Raises :class:`RejectedInputError` (with a witness)
    for inputs that are negative somewhere and :class:`CertificationError`
    when every route fails.
    """
    opts = opts or CertifyOptions()
    if f.nvars != 4 or f.degree != 4:
        raise ValueError("certify expects a homogeneous quartic in x0..x3")
    neg = find_negative(f, opts.negativity_samples, opts.seed, opts.tau_zero)
    if neg is not None:
        raise RejectedInputError(*neg)
    diagnostics: dict[str, str] = {}
    min_result = None

    if opts.method is Route.AUTO:
        res = sos_check(f)
        if res.gram is not None:
            try:
                return _finalize(sos_certificate(f, res.squares()), f, opts)
            except QcertError as exc:
                diagnostics["sos"] = f"{res.status.value}: {exc}"
        else:
            diagnostics["sos"] = res.status.value

    if opts.method in (Route.AUTO, Route.STRUCTURED):
        try:
            min_result = min_on_sphere(f, n_starts=opts.n_starts, seed=opts.seed, tau_zero=opts.tau_zero)
            if min_result.classification is Classification.NEGATIVE_SOMEWHERE:
                raise RejectedInputError(min_result.xstar, min_result.value)
            return _finalize(structured_certificate(f, opts, min_result), f, opts)
        except RejectedInputError:
            raise
        except QcertError as exc:
            diagnostics["structured"] = f"{type(exc).__name__}: {exc}"
            log.info("structured route failed: %s", exc)

    if opts.method in (Route.AUTO, Route.DIRECT):
        try:
            return _finalize(direct_certificate(f, opts.tol), f, opts)
        except QcertError as exc:
            diagnostics["direct"] = f"{type(exc).__name__}: {exc}"
            log.info("direct route failed: %s", exc)
    raise CertificationError(diagnostics)
