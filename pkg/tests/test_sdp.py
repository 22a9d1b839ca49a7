from __future__ import annotations

import numpy as np
import pytest

from qcert.errors import NotPsdError, ShapeMismatchError
from qcert.polycore import HomogPoly, from_gram, monomials, mul, sum_of_squares
from qcert.sdp import SdpOptions, SdpProblem, SdpStatus, extract_squares, gram_stack, psd_factor, solve

from conftest import _sym, random_feasible, random_infeasible, random_poly


class TestExamples:
    def test_scalar_equal_one(self):
        sol = solve(SdpProblem([1], [np.ones((1, 1, 1))], [1.0]))
        assert sol.status is SdpStatus.FEASIBLE
        assert abs(sol.X[0][0, 0] - 1.0) <= 1e-9

    def test_correlation_matrix_max_offdiagonal(self):
        A = np.zeros((2, 2, 2))
        A[0, 0, 0] = A[1, 1, 1] = 1.0
        C = np.array([[0.0, 0.5], [0.5, 0.0]])
        sol = solve(SdpProblem([2], [A], [1.0, 1.0], objective=[C]))
        assert abs(sol.X[0][0, 1] - 1.0) <= 1e-7
        assert abs(sol.lambda_min[0]) <= 1e-7
        assert sol.ok

    def test_scalar_equal_minus_one(self):
        sol = solve(SdpProblem([1], [np.ones((1, 1, 1))], [-1.0]))
        assert sol.status is SdpStatus.INFEASIBLE
        assert not sol.ok

    def test_inconsistent_constraints(self):
        sol = solve(SdpProblem([1], [np.ones((2, 1, 1))], [1.0, 2.0]))
        assert sol.status is SdpStatus.INFEASIBLE

    def test_max_eigenvalue(self, rng):
        # oracle: max <C, X> over trace-one PSD X is lambda_max(C)
        for _ in range(5):
            C = _sym(rng, 5)
            sol = solve(SdpProblem([5], [np.eye(5)[None]], [1.0], objective=[C]))
            assert abs(sol.objective - np.linalg.eigvalsh(C)[-1]) <= 1e-7


class TestRandomSuites:
    def test_feasible_problems(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p, _ = random_feasible(rng)
            sol = solve(p)
            assert sol.status is SdpStatus.FEASIBLE, sol.diagnostics
            assert sol.residual <= 1e-8
            scale = max(np.trace(X) for X in sol.X)
            assert min(sol.lambda_min) >= -1e-9 * scale

    def test_infeasible_problems(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            sol = solve(random_infeasible(rng))
            assert sol.status is SdpStatus.INFEASIBLE
            assert sol.t is None or sol.t < -1e-7

    def test_deterministic(self):
        p, _ = random_feasible(np.random.default_rng(9))
        a, b = solve(p), solve(p)
        assert all(np.array_equal(x, y) for x, y in zip(a.X, b.X))


class TestPhaseOneOptimum:
    # values frozen from an independent conic solver (CVXOPT and Clarabel agree to 1e-9)
    def test_choi_lam_gram(self):
        from qcert.corpus import choi_lam

        f = choi_lam()
        sol = solve(SdpProblem([10], [gram_stack(monomials(4, 2))], f.coeffs / f.norm_inf()))
        assert sol.status is SdpStatus.INFEASIBLE
        assert sol.t == pytest.approx(-0.0106554757, abs=1e-7)

    def test_motzkin_gram(self):
        from qcert.corpus import motzkin

        g = motzkin()
        sol = solve(SdpProblem([10], [gram_stack(monomials(3, 3))], g.coeffs / g.norm_inf()))
        assert sol.status is SdpStatus.INFEASIBLE
        assert sol.t == pytest.approx(-0.0023295175, abs=1e-7)


class TestExtractSquares:
    def test_identity(self):
        sq = extract_squares(np.eye(2), monomials(2, 1))
        assert sorted(s.terms() for s in sq) == [[((0, 1), 1.0)], [((1, 0), 1.0)]]

    def test_rank_one(self):
        sq = extract_squares(np.diag([4.0, 0.0]), monomials(2, 1))
        assert len(sq) == 1
        assert sq[0].terms() == [((1, 0), 2.0)]

    def test_random_15(self, rng):
        B = rng.standard_normal((15, 15))
        G = B @ B.T
        basis = monomials(3, 4)
        sq = extract_squares(G, basis)
        assert len(sq) <= 15
        err = (sum_of_squares(sq, 3, 8) - from_gram(G, basis)).norm_inf()
        assert err <= 1e-10 * np.abs(G).max()

    def test_round_trip_50(self):
        rng = np.random.default_rng(3)
        basis = monomials(4, 2)
        for _ in range(50):
            r = int(rng.integers(1, 11))
            B = rng.standard_normal((10, r))
            G = B @ B.T
            sq = extract_squares(G, basis)
            err = (sum_of_squares(sq, 4, 4) - from_gram(G, basis)).norm_inf()
            assert err <= 1e-9 * np.abs(G).max()

    def test_tiny_negative_clamped(self):
        G = np.diag([1.0, -1e-12])
        assert len(extract_squares(G, monomials(2, 1), eps=1e-9)) == 1

    def test_not_psd(self):
        with pytest.raises(NotPsdError):
            extract_squares(np.diag([1.0, -1e-3]), monomials(2, 1), eps=1e-9)
        with pytest.raises(NotPsdError):
            psd_factor(-np.eye(2), 1e-9)

    def test_basis_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            extract_squares(np.eye(3), monomials(2, 1))


class TestGramStack:
    def test_plain(self, rng):
        basis = monomials(4, 2)
        A = gram_stack(basis)
        G = _sym(rng, 10)
        assert np.allclose(np.einsum("kij,ij->k", A, G), from_gram(G, basis).coeffs, atol=1e-12)

    def test_with_multiplier(self, rng):
        basis = monomials(3, 1)
        h = random_poly(rng, 3, 6)
        A = gram_stack(basis, h)
        G = _sym(rng, 3)
        ref = mul(h, from_gram(G, basis))
        assert np.allclose(np.einsum("kij,ij->k", A, G), ref.coeffs, atol=1e-12)

    def test_ring_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            gram_stack(monomials(3, 1), HomogPoly.zero(4, 2))


class TestProblemValidation:
    def test_shape(self):
        with pytest.raises(ShapeMismatchError):
            SdpProblem([2], [np.zeros((1, 3, 3))], [0.0])

    def test_asymmetric(self):
        A = np.zeros((1, 2, 2))
        A[0, 0, 1] = 1.0
        with pytest.raises(ShapeMismatchError):
            SdpProblem([2], [A], [0.0])

    def test_from_constraints(self):
        p = SdpProblem.from_constraints([1, 2], [([np.ones((1, 1)), None], 1.0), ([None, np.eye(2)], 2.0)])
        assert p.m == 2
        assert p.A[1][0].sum() == 0.0 and p.A[0][1].sum() == 0.0
        sol = solve(p)
        assert sol.status is SdpStatus.FEASIBLE

    def test_options_respected(self):
        p, _ = random_feasible(np.random.default_rng(4))
        sol = solve(p, SdpOptions(max_iter=2))
        assert sol.iterations <= 2
