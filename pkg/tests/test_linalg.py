import numpy as np
import pytest

from bld_kaporin.errors import FactorizationError, NotPositiveDefiniteError, SingularFactorError
from bld_kaporin.linalg import cholesky, ic0, identity_factor, lanczos, sym_eig, tri_solve
from bld_kaporin.matio import SparseSymMatrix
from bld_kaporin.synth import make_sparse_network, random_spd


class TestCholesky:
    def test_diagonal(self):
        Q = cholesky(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(Q.to_dense(), np.diag([2.0, 3.0]))

    def test_two_by_two_reproduces_product(self):
        A = np.array([[4.0, 2.0], [2.0, 5.0]])
        Q = cholesky(A)
        np.testing.assert_allclose(Q.to_dense(), [[2.0, 0.0], [1.0, 2.0]])
        np.testing.assert_allclose(Q.to_dense() @ Q.to_dense().T, A, rtol=1e-14)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_random_spd_identity(self):
        rng = np.random.default_rng(0)
        for n in (5, 40, 100):
            S = random_spd(n, rng)
            L = cholesky(S).to_dense()
            assert np.abs(L @ L.T - S).max() <= 1e-10 * np.abs(S).max()


class TestIc0:
    def test_diagonal_input(self):
        A = SparseSymMatrix.from_coo(2, [0, 1], [0, 1], [2.0, 1.0])
        Q = ic0(A)
        np.testing.assert_allclose(Q.to_dense(), np.diag([np.sqrt(2.0), 1.0]))
        assert Q.shift == 0.0

    def test_full_pattern_equals_exact(self):
        rng = np.random.default_rng(1)
        S = random_spd(12, rng)
        Q_ic = ic0(SparseSymMatrix.from_dense(S))
        Q_ex = cholesky(S)
        np.testing.assert_allclose(Q_ic.to_dense(), Q_ex.to_dense(), rtol=1e-12, atol=1e-12)

    def test_pattern_matches_lower_triangle(self):
        A = make_sparse_network(200, seed=9)
        Q = ic0(A)
        assert Q.shift == 0.0
        assert Q.nnz == A.nnz_lower
        got = set(zip(*Q.sparse_values.nonzero()))
        want = set(zip(*A.lower.nonzero()))
        assert got == want

    def test_shift_recovers_breakdown(self):
        # needs (1+beta)^2 > 1.44: doubling from 1e-3 first succeeds at 0.256
        A = SparseSymMatrix.from_dense(np.array([[1.0, 1.2], [1.2, 1.0]]))
        Q = ic0(A)
        assert Q.shift == pytest.approx(0.256)
        shifted = A.to_dense() + Q.shift * np.diag(np.diag(A.to_dense()))
        np.testing.assert_allclose(Q.to_dense() @ Q.to_dense().T, shifted, rtol=1e-12)

    def test_breakdown_past_unit_shift(self):
        A = SparseSymMatrix.from_dense(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(FactorizationError):
            ic0(A)

    def test_nonpositive_diagonal_rejected(self):
        A = SparseSymMatrix.from_coo(2, [0, 1, 1], [0, 0, 1], [0.0, 1.0, 1.0])
        with pytest.raises(NotPositiveDefiniteError):
            ic0(A)

    def test_matches_dense_reference(self):
        # independent oracle: the textbook pattern-masked recurrence run
        # densely over all index pairs
        A = make_sparse_network(60, seed=17)
        Ad = A.to_dense()
        mask = np.tril(Ad) != 0.0
        n = 60
        L_ref = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1):
                if not mask[i, j]:
                    continue
                s = Ad[i, j] - np.dot(L_ref[i, :j], L_ref[j, :j])
                if j == i:
                    assert s > 0.0
                    L_ref[i, i] = np.sqrt(s)
                else:
                    L_ref[i, j] = s / L_ref[j, j]
        Q = ic0(A)
        assert Q.shift == 0.0
        np.testing.assert_allclose(Q.to_dense(), L_ref, rtol=1e-13, atol=1e-14)


class TestSymEig:
    def test_diagonal(self):
        e = sym_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(e.values, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(e.vectors), np.eye(2))

    def test_offdiagonal_pair(self):
        e = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(e.values, [1.0, -1.0], atol=1e-14)

    def test_residual_invariants(self):
        rng = np.random.default_rng(5)
        S = rng.standard_normal((50, 50))
        S = 0.5 * (S + S.T)
        e = sym_eig(S)
        W = e.vectors
        assert np.abs(W.T @ W - np.eye(50)).max() <= 1e-10
        assert np.abs(S - (W * e.values) @ W.T).max() <= 1e-8 * np.abs(S).max()
        assert np.all(np.diff(e.values) <= 1e-12)

    def test_orthogonal_similarity_spectrum(self):
        rng = np.random.default_rng(8)
        S = rng.standard_normal((30, 30))
        S = 0.5 * (S + S.T)
        Q, _ = np.linalg.qr(rng.standard_normal((30, 30)))
        v1 = sym_eig(S).values
        v2 = sym_eig(Q @ S @ Q.T).values
        np.testing.assert_allclose(v1, v2, rtol=1e-8, atol=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestTriSolve:
    def test_diagonal(self):
        L = cholesky(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(tri_solve(L, [2.0, 3.0], "forward"), [1.0, 1.0])

    def test_forward(self):
        L = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))  # factor [[2,0],[1,2]]
        x = tri_solve(L, [2.0, 3.0], "forward")
        np.testing.assert_allclose(L.to_dense() @ x, [2.0, 3.0], rtol=1e-12)
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_adjoint(self):
        L = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))
        x = tri_solve(L, [3.0, 2.0], "adjoint")
        np.testing.assert_allclose(L.to_dense().T @ x, [3.0, 2.0], rtol=1e-12)
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_sparse_matches_dense(self):
        A = make_sparse_network(80, seed=2)
        Q = ic0(A)
        rng = np.random.default_rng(0)
        b = rng.standard_normal(80)
        x = tri_solve(Q, b, "forward")
        res = Q.to_dense() @ x - b
        assert np.linalg.norm(res) <= 1e-12 * np.linalg.norm(b)

    def test_zero_diagonal_rejected(self):
        Q = identity_factor(2)
        Q.dense_values[0, 0] = 0.0  # corrupt after construction
        with pytest.raises(SingularFactorError):
            tri_solve(Q, [1.0, 1.0])


class TestLanczos:
    def test_scaled_identity_breaks_down_immediately(self):
        v0 = np.array([0.6, 0.8, 0.0])
        res = lanczos(lambda x: 3.0 * x, v0, m=5)
        assert res.breakdown
        assert res.m == 1
        np.testing.assert_allclose(res.alphas, [3.0])

    def test_full_krylov_recovers_spectrum(self):
        d = np.array([1.0, 2.0, 3.0])
        v0 = np.ones(3) / np.sqrt(3.0)
        res = lanczos(lambda x: d * x, v0, m=3)
        vals = np.sort(np.linalg.eigvalsh(res.tridiagonal()))
        np.testing.assert_allclose(vals, [1.0, 2.0, 3.0], rtol=1e-12)

    def test_invariant_start_vector(self):
        d = np.array([2.0, 1.0])
        res = lanczos(lambda x: d * x, np.array([1.0, 0.0]), m=2)
        assert res.breakdown
        assert res.m == 1
        np.testing.assert_allclose(res.alphas, [2.0])

    def test_basis_orthonormal_and_ritz_contained(self):
        rng = np.random.default_rng(11)
        M = random_spd(60, rng, kappa=1e3)
        v0 = rng.standard_normal(60)
        v0 /= np.linalg.norm(v0)
        res = lanczos(lambda x: M @ x, v0, m=25)
        U = res.basis
        assert np.abs(U.T @ U - np.eye(res.m)).max() <= 1e-10
        T = res.tridiagonal()
        assert np.abs(U.T @ (M @ U) - T).max() <= 1e-8 * np.linalg.norm(M, 2)
        lam = np.linalg.eigvalsh(M)
        ritz = np.linalg.eigvalsh(T)
        delta = 1e-8 * np.abs(lam).max()
        assert ritz.min() >= lam.min() - delta
        assert ritz.max() <= lam.max() + delta

    def test_non_unit_start_rejected(self):
        with pytest.raises(ValueError):
            lanczos(lambda x: x, np.array([1.0, 1.0]), m=2)
