from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qcert.polycore import HomogPoly, n_monomials
from qcert.sdp import SdpProblem

settings.register_profile(
    "qcert",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qcert")

# acceptance criteria record one line each; printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def int_polys(nvars: int, degree: int, lo: int = -9, hi: int = 9):
    """Polynomials with small integer coefficients: float arithmetic on them is exact."""
    n = n_monomials(nvars, degree)
    return st.lists(st.integers(lo, hi), min_size=n, max_size=n).map(
        lambda c: HomogPoly(nvars, degree, np.array(c, dtype=np.float64))
    )


def random_poly(rng: np.random.Generator, nvars: int, degree: int) -> HomogPoly:
    return HomogPoly(nvars, degree, rng.standard_normal(n_monomials(nvars, degree)))


def _sym(rng, n):
    B = rng.standard_normal((n, n))
    return B + B.T


def random_feasible(rng):
    """Constraints generated from a known interior point, plus a trace normalization."""
    blocks = [int(n) for n in rng.integers(1, 7, size=rng.integers(1, 4))]
    X0 = []
    for n in blocks:
        B = rng.standard_normal((n, n))
        X0.append(B @ B.T + 0.5 * np.eye(n))
    dim = sum(n * (n + 1) // 2 for n in blocks)
    m = int(rng.integers(1, dim)) if dim > 1 else 1
    A = [np.stack([_sym(rng, n) for _ in range(m)] + [np.eye(n)]) for n in blocks]
    rhs = np.array([sum(np.vdot(Ab[i], Xb) for Ab, Xb in zip(A, X0)) for i in range(m + 1)])
    return SdpProblem(blocks, A, rhs), X0


def random_infeasible(rng):
    """Farkas construction: sum_i y_i A_i = W > 0 while b.y < 0, so no X >= 0 fits."""
    blocks = [int(n) for n in rng.integers(2, 6, size=rng.integers(1, 3))]
    m = int(rng.integers(2, 6))
    y = rng.standard_normal(m)
    y[0] = np.sign(y[0]) * (0.5 + abs(y[0]))
    A = []
    trace_w = 0.0
    for n in blocks:
        others = [_sym(rng, n) for _ in range(m - 1)]
        B = rng.standard_normal((n, n))
        W = B @ B.T + np.eye(n)
        trace_w += np.trace(W)
        first = (W - sum(yi * Ai for yi, Ai in zip(y[1:], others))) / y[0]
        A.append(np.stack([first] + others))
    rhs = rng.standard_normal(m)
    # shift rhs[0] so that b.y = -trace(W)/2, which forces t* <= -1/2
    rhs[0] = (-0.5 * trace_w - rhs[1:] @ y[1:]) / y[0]
    return SdpProblem(blocks, A, rhs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
