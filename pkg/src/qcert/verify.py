"""Independent checking of certificates, and a plain sum-of-squares test.

Nothing here looks at how a certificate was produced: every polynomial is
re-expanded from the certificate's own coefficient lists.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .certificate import Certificate, Method
from .errors import ShapeMismatchError
from .polycore import HomogPoly, evaluate, monomials, mul, sum_of_squares
from .sdp import SdpProblem, SdpStatus, extract_squares, gram_stack, solve

DEFAULT_TOL = 1e-6
POSITIVITY_SAMPLES = 100
POSITIVITY_REQUIRED = 99
MAX_FACTOR_SQUARES = 3


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)
    tol: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "qcert-verify-report",
            "version": 1,
            "passed": self.passed,
            "tol": self.tol,
            "checks": [
                {"name": c.name, "passed": c.passed, "value": c.value, "detail": c.detail}
                for c in self.checks
            ],
        }

    def summary(self) -> str:
        lines = [f"certificate {'VALID' if self.passed else 'INVALID'} (tol {self.tol:g})"]
        for c in self.checks:
            val = "" if c.value is None else f" [{c.value:.3e}]"
            lines.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.name}{val} {c.detail}".rstrip())
        return "\n".join(lines)


def _rel(diff: float, scale: float) -> float:
    if not np.isfinite(diff) or not np.isfinite(scale):
        return float("inf")
    return diff / scale if scale > 0 else (0.0 if diff == 0 else float("inf"))


def _all_finite(cert: Certificate) -> bool:
    polys = [cert.f, cert.qmult, cert.p, *cert.squares, *cert.qmult_squares]
    for fac in cert.factors:
        polys += [fac.poly, *fac.squares]
    return all(np.all(np.isfinite(p.coeffs)) for p in polys) and np.all(np.isfinite(cert.transform.matrix))


def sphere_samples(nvars: int, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, nvars))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def verify_certificate(
    f: HomogPoly,
    cert: Certificate,
    tol: float = DEFAULT_TOL,
    seed: int = 12345,
) -> VerifyReport:
    """Check ``qmult * f = sum r_k^2`` and the certificate's structural claims.

    Failures are report entries, never exceptions.
    """
    rep = VerifyReport(tol=tol)
    add = rep.checks.append

    if not _all_finite(cert):
        add(Check("finite", False, detail="non-finite coefficient in certificate"))
        return rep

    shape_ok = (
        f.nvars == 4
        and f.degree == 4
        and cert.qmult.nvars == 4
        and cert.qmult.degree == 4
        and cert.p.nvars == 4
        and cert.p.degree == 8
        and all(r.nvars == 4 and r.degree == 4 for r in cert.squares)
        and all(s.nvars == 4 and s.degree == 2 for s in cert.qmult_squares)
    )
    add(Check("degrees", shape_ok, detail="deg f = 4, deg qmult = 4, deg p = 8 in 4 variables"))
    if not shape_ok:
        return rep

    same_input = cert.f.nvars == f.nvars and cert.f.degree == f.degree
    dev = (cert.f - f).norm_inf() if same_input else float("inf")
    rel = _rel(dev, f.norm_inf())
    add(Check("input_matches", rel <= 1e-12, rel, "certificate was issued for this polynomial"))

    # (a) p equals the sum of its declared squares
    ssq = sum_of_squares(cert.squares, 4, 8)
    rel = _rel((ssq - cert.p).norm_inf(), cert.p.norm_inf())
    add(Check("squares_sum_to_p", rel <= tol, rel, f"{len(cert.squares)} squares"))

    # (b) qmult equals the sum of its declared squares
    qsq = sum_of_squares(cert.qmult_squares, 4, 4)
    rel = _rel((qsq - cert.qmult).norm_inf(), cert.qmult.norm_inf())
    add(Check("qmult_is_sos", bool(cert.qmult_squares) and rel <= tol, rel, f"{len(cert.qmult_squares)} squares"))

    # (c) the identity itself
    lhs = mul(cert.qmult, f)
    rel = _rel((lhs - cert.p).norm_inf(), lhs.norm_inf())
    add(Check("identity", rel <= tol, rel, "qmult*f = p"))

    # (e) qmult > 0 almost everywhere (sampled)
    X = sphere_samples(4, POSITIVITY_SAMPLES, seed)
    qv = evaluate(cert.qmult, X)
    npos = int(np.sum(qv > 0))
    add(Check("qmult_positive_ae", npos >= POSITIVITY_REQUIRED, float(npos), f"{npos}/{POSITIVITY_SAMPLES} samples"))

    # (f) two-quadric structure of structured certificates
    if cert.method is Method.STRUCTURED:
        add(_check_factors(cert, tol))

    M = np.asarray(cert.transform.matrix)
    ortho = M.shape == (4, 4) and float(np.max(np.abs(M.T @ M - np.eye(4)))) <= 1e-12
    add(Check("transform_valid", ortho and np.isfinite(cert.scale) and cert.scale > 0, None, "orthogonal matrix, positive scale"))
    return rep


def _check_factors(cert: Certificate, tol: float) -> Check:
    if len(cert.factors) != 2:
        return Check("factor_structure", False, detail=f"expected 2 quadric factors, got {len(cert.factors)}")
    worst = 0.0
    for fac in cert.factors:
        if fac.poly.degree != 2 or len(fac.squares) > MAX_FACTOR_SQUARES or not fac.squares:
            return Check(
                "factor_structure", False,
                detail=f"factor {fac.name}: degree {fac.poly.degree}, {len(fac.squares)} squares",
            )
        back = sum_of_squares(fac.squares, fac.poly.nvars, 2)
        worst = max(worst, _rel((back - fac.poly).norm_inf(), fac.poly.norm_inf()))
    prod = mul(cert.factors[0].poly, cert.factors[1].poly) * cert.factor_scale
    worst = max(worst, _rel((prod - cert.qmult).norm_inf(), cert.qmult.norm_inf()))
    counts = ", ".join(f"{fac.name}: {len(fac.squares)}" for fac in cert.factors)
    return Check("factor_structure", worst <= tol and cert.factor_scale > 0, worst, f"squares per factor {counts}")


def sample_check(
    f: HomogPoly,
    cert: Certificate,
    npoints: int = 200,
    tol: float = 1e-8,
    seed: int = 2024,
) -> bool:
    """Pointwise version of the identity check at seeded points of the sphere."""
    if npoints < 1:
        raise ValueError("npoints must be >= 1")
    X = sphere_samples(f.nvars, npoints, seed)
    lhs = evaluate(cert.qmult, X) * evaluate(f, X)
    rhs = evaluate(cert.p, X)
    return bool(np.all(np.abs(lhs - rhs) <= tol * np.maximum(1.0, np.abs(lhs))))


class SosStatus(enum.Enum):
    IS_SOS = "IsSos"
    NOT_SOS = "NotSos"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class SosResult:
    status: SosStatus
    gram: np.ndarray | None
    basis: tuple
    t: float | None
    sdp_status: SdpStatus
    residual: float = float("nan")

    @property
    def is_sos(self) -> bool:
        return self.status is SosStatus.IS_SOS

    def squares(self, eps: float = 1e-7) -> list[HomogPoly]:
        if self.gram is None:
            return []
        scale = max(1.0, float(np.max(np.abs(self.gram))))
        return extract_squares(self.gram, self.basis, eps * scale)


def sos_check(g: HomogPoly) -> SosResult:
    """Gram-matrix SDP test of whether g is a sum of squares of forms.

    Feasible -> IsSos, Infeasible -> NotSos, anything marginal -> Inconclusive
    (the Gram matrix of a marginal solution is still returned).
    """
    if g.degree % 2:
        raise ShapeMismatchError(f"sos_check needs even degree, got {g.degree}")
    if g.degree > 8 or g.nvars > 4:
        raise ShapeMismatchError("sos_check supports degree <= 8 in <= 4 variables")
    basis = monomials(g.nvars, g.degree // 2)
    scale = g.norm_inf()
    if scale == 0.0:
        return SosResult(SosStatus.IS_SOS, np.zeros((len(basis), len(basis))), basis, 0.0, SdpStatus.FEASIBLE, 0.0)
    gn = g * (1.0 / scale)
    sol = solve(SdpProblem([len(basis)], [gram_stack(basis)], gn.coeffs))
    G = sol.X[0] * scale
    if sol.status is SdpStatus.FEASIBLE:
        status = SosStatus.IS_SOS
    elif sol.status is SdpStatus.INFEASIBLE:
        status = SosStatus.NOT_SOS
    else:
        status = SosStatus.INCONCLUSIVE
    result = SosResult(status, G if sol.status is not SdpStatus.INFEASIBLE else None, basis, sol.t, sol.status)
    if result.gram is not None:
        try:
            back = sum_of_squares(result.squares(), g.nvars, g.degree)
            result.residual = (back - g).norm_inf() / scale
        except ValueError:
            result.residual = float("inf")
        if status is SosStatus.IS_SOS and not result.residual <= 1e-8:
            result.status = SosStatus.INCONCLUSIVE
    return result
