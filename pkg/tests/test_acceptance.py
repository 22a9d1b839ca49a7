"""End-to-end acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

from qcert import CertifyOptions, Method, certify, verify_certificate
from qcert.certify import Route, hilbert_multiplier
from qcert.cli import EXIT_REJECTED, run
from qcert.corpus import choi_lam, corpus_instances, indefinite, motzkin, random_orthogonal, tamper
from qcert.polycore import (
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
from qcert.polytext import format_poly, parse_poly
from qcert.reduce import ReducedQuartic, sextic_h
from qcert.polycore import OrthoMap
from qcert.sdp import SdpStatus, extract_squares, solve
from qcert.sphereopt import min_on_sphere
from qcert.verify import SosStatus, sos_check, sphere_samples

from conftest import ACCEPTANCE_LINES, random_feasible, random_infeasible, random_poly

pytestmark = pytest.mark.acceptance

# Structured certificates produced along the way, for the rank criterion
STRUCTURED: list = []


class Criterion:
    """Collects sub-checks; records one summary line whatever happens."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.failures: list[str] = []
        self.facts: list[str] = []

    def check(self, ok: bool, what: str):
        if not ok:
            self.failures.append(what)

    def note(self, fact: str):
        self.facts.append(fact)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None:
            self.failures.append(f"error: {exc_type.__name__}: {exc}")
        verdict = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.facts + [f"failed: {f}" for f in self.failures])
        ACCEPTANCE_LINES[self.number] = f"[{verdict}] {self.number}. {self.title}: {detail}"
        return False


def _keep(cert):
    if cert.method is Method.STRUCTURED:
        STRUCTURED.append(cert)


def test_criterion_1_choi_lam():
    with Criterion(1, "Choi-Lam end-to-end") as c:
        F = choi_lam()
        X = sphere_samples(4, 10_000, seed=1)
        vmin = float(evaluate(F, X).min())
        c.note(f"min over 1e4 samples {vmin:.2e}")
        c.check(vmin >= -1e-9, "AM-GM sampling")
        res = sos_check(F)
        c.note(f"sos_check {res.status.value} t*={res.t:.3e}")
        c.check(res.status is SosStatus.NOT_SOS and res.t < -1e-6, "sos_check NotSos with t* < -1e-6")
        t0 = time.perf_counter()
        cert = certify(F)
        rep = verify_certificate(F, cert)
        elapsed = time.perf_counter() - t0
        _keep(cert)
        c.note(f"{cert.method.value}, residual {cert.residual:.2e}, {elapsed:.1f}s")
        c.check((cert.qmult.degree, cert.p.degree) == (4, 8), "degrees 4/8")
        c.check(cert.residual <= 1e-6 and rep["identity"].value <= 1e-6, "residual <= 1e-6")
        c.check(rep.passed, "verify")
        c.check(elapsed <= 60.0, "runtime <= 60 s")
    assert not c.failures, c.failures


def test_criterion_2_hilbert_step_motzkin():
    with Criterion(2, "Hilbert step on Motzkin") as c:
        h = motzkin()
        hm = hilbert_multiplier(h)
        lam_u = float(np.linalg.eigvalsh(hm.u_gram)[0] / max(1.0, np.abs(hm.u_gram).max()))
        c.note(f"hilbert_multiplier {hm.status.value}, lambda_min(Gram u) {lam_u:.1e}")
        c.check(hm.status is SdpStatus.FEASIBLE, "hilbert_multiplier status Feasible")
        prod = mul(sphere_form(3), h)
        sq = sos_check(prod)
        back = sum_of_squares(sq.squares(), 3, 8) if sq.gram is not None else None
        resid = (back - prod).norm_inf() / prod.norm_inf() if back is not None else float("inf")
        c.note(f"(sum X^2)*Motzkin re-expands at {resid:.1e}")
        c.check(resid <= 1e-7, "re-expansion residual <= 1e-7")
        plain = sos_check(h)
        c.note(f"sos_check(Motzkin) {plain.status.value}")
        c.check(plain.status is SosStatus.NOT_SOS, "Motzkin NotSos")
    assert not c.failures, c.failures


def test_criterion_3_completing_the_square():
    with Criterion(3, "completing-the-square identity") as c:
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(200):
            f2, f3, f4 = random_poly(rng, 3, 2), random_poly(rng, 3, 3), random_poly(rng, 3, 4)
            red = ReducedQuartic(f2, f3, f4, 0.0, 1.0, OrthoMap.identity(4), 0.0, False)
            L2, L3, L4 = lift(f2), lift(f3), lift(f4)
            x0 = x0_power(1)
            g = mul(L2, x0_power(2)) + mul(L3, x0) + L4
            lhs = mul(L2, g) * 4.0
            completed = mul(L2, x0) * 2.0 + L3
            rhs = mul(completed, completed) + lift(sextic_h(red))
            worst = max(worst, (lhs - rhs).norm_inf() / lhs.norm_inf())
        c.note(f"200 triples, worst relative defect {worst:.1e}")
        c.check(worst <= 1e-12, "defect <= 1e-12")
    assert not c.failures, c.failures


def test_criterion_4_corpus():
    with Criterion(4, "corpus certification") as c:
        worst, methods, c0_dev, npos = 0.0, {}, 0.0, 0
        for eps, f in corpus_instances(100, seed=0):
            cert = certify(f)
            _keep(cert)
            methods[cert.method.value] = methods.get(cert.method.value, 0) + 1
            worst = max(worst, cert.residual)
            c.check(verify_certificate(f, cert).passed, "verify")
            if eps > 0:
                scert = certify(f, CertifyOptions(method=Route.STRUCTURED))
                _keep(scert)
                worst = max(worst, scert.residual)
                c.check(verify_certificate(f, scert).passed, "verify structured")
                c.check(scert.notes.get("case") == "positive", "positive case for eps > 0")
                c0_dev = max(c0_dev, abs(scert.notes["c0_measured"] - 1.0))
                npos += 1
        c.note(f"100 instances {methods}, worst residual {worst:.1e}")
        c.note(f"{npos} positive-case reductions, max |c0-1| {c0_dev:.1e}")
        c.check(worst <= 1e-6, "residual <= 1e-6")
        c.check(c0_dev <= 1e-7, "|c0 - 1| <= 1e-7")
    assert not c.failures, c.failures


def test_criterion_6_rejection(capsys):
    with Criterion(6, "rejection of indefinite quartics") as c:
        worst = -np.inf
        for seed in range(20):
            f = indefinite(seed)
            text = format_poly(f)
            code = run(["certify", f"--input={text}"])
            out = capsys.readouterr().out
            c.check(code == EXIT_REJECTED, f"seed {seed}: exit code {code}")
            if code == EXIT_REJECTED:
                x = np.array(json.loads(out[out.index("[") :]))
                val = float(evaluate(parse_poly(text), x))
                worst = max(worst, val)
                c.check(val < -1e-9, f"seed {seed}: witness value {val:.2e}")
        c.note(f"20 instances exit 2, largest witness value {worst:.2e}")
    assert not c.failures, c.failures


def test_criterion_7_orthogonal_invariance():
    with Criterion(7, "orthogonal invariance") as c:
        F = choi_lam()
        worst = 0.0
        for s in range(20):
            G = apply_map(F, random_orthogonal(1000 + s))
            cert = certify(G)
            _keep(cert)
            worst = max(worst, cert.residual)
            c.check(cert.residual <= 1e-6, f"Q{s}: residual {cert.residual:.1e}")
            c.check(verify_certificate(G, cert).passed, f"Q{s}: verify against F o Q")
            c.check(not verify_certificate(F, cert).passed, f"Q{s}: verify against F should fail")
        c.note(f"20 rotations, worst residual {worst:.1e}; certificates bind to F o Q only")
    assert not c.failures, c.failures


def test_criterion_5_structure():
    with Criterion(5, "structured certificate ranks") as c:
        certs = list(STRUCTURED)
        if not certs:
            certs = [certify(choi_lam(), CertifyOptions(method=Route.STRUCTURED))]
        worst_rank, worst_n = 0, 0
        for cert in certs:
            worst_n = max(worst_n, len(cert.squares))
            for fac in cert.factors:
                lam = np.linalg.eigvalsh(quadratic_gram(fac.poly))
                rank = int(np.sum(lam > 1e-8 * lam[-1]))
                worst_rank = max(worst_rank, rank)
        c.note(f"{len(certs)} structured certificates, max Gram rank {worst_rank}, max N {worst_n}")
        c.check(worst_rank <= 3, "rank(Gram q2), rank(Gram f2) <= 3")
        c.check(worst_n <= 27, "N <= 27")
    assert not c.failures, c.failures


def test_criterion_8_sdp_suite():
    with Criterion(8, "SDP solver suite") as c:
        rng = np.random.default_rng(8)
        feas = sum(solve(random_feasible(rng)[0]).status is SdpStatus.FEASIBLE for _ in range(50))
        infeas = sum(solve(random_infeasible(rng)).status is SdpStatus.INFEASIBLE for _ in range(20))
        worst = 0.0
        basis = monomials(4, 2)
        for _ in range(50):
            r = int(rng.integers(1, 11))
            B = rng.standard_normal((10, r))
            G = B @ B.T
            target = from_gram(G, basis)
            back = sum_of_squares(extract_squares(G, basis), 4, 4)
            worst = max(worst, (back - target).norm_inf() / target.norm_inf())
        c.note(f"feasible {feas}/50, infeasible {infeas}/20, extract_squares worst {worst:.1e}")
        c.check(feas == 50, "feasible classified Feasible")
        c.check(infeas == 20, "infeasible classified Infeasible")
        c.check(worst <= 1e-9, "round trip <= 1e-9")
    assert not c.failures, c.failures


def test_criterion_9_fault_injection():
    with Criterion(9, "fault injection") as c:
        pool = []
        F = choi_lam()
        for s in range(5):
            G = apply_map(F, random_orthogonal(2000 + s))
            pool.append((G, certify(G)))
        for eps, f in corpus_instances(5, seed=9):
            pool.append((f, certify(f)))
        caught, fields = 0, {}
        for k in range(50):
            f, cert = pool[k % len(pool)]
            bad, field = tamper(cert, k, rel=1e-3)
            fields[field.value] = fields.get(field.value, 0) + 1
            rejected = not verify_certificate(f, bad).passed
            caught += rejected
            c.check(rejected, f"tamper {k} ({field.value}) accepted")
        c.note(f"{caught}/50 rejected, fields {fields}")
    assert not c.failures, c.failures
