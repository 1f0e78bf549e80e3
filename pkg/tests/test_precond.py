import math

import numpy as np
import pytest

from bld_kaporin.divergence import bregman_logdet, gamma_map
from bld_kaporin.errors import DomainError, NotPositiveDefiniteError, RankError
from bld_kaporin.linalg import LowerTriFactor, cholesky, ic0, identity_factor
from bld_kaporin.precond import (
    Preconditioner,
    bld_truncate,
    divergence_alpha,
    error_core,
    flat_interval,
    kappa2_alpha,
    ln_kaporin_alpha,
    optimal_alpha,
    preconditioned_logdet,
    scale_to_unit_trace,
    sym_preconditioned_operator,
    tsvd_truncate,
)
from bld_kaporin.synth import haar_orthogonal, make_sparse_network, random_spd


def _planted_core(thetas, seed=0, lower_seed=None):
    """A = Q (I + U diag(thetas) U') Q' for a random triangular Q."""
    thetas = np.asarray(thetas, dtype=np.float64)
    n = thetas.size
    rng = np.random.default_rng(seed if lower_seed is None else lower_seed)
    L = np.tril(rng.standard_normal((n, n)), -1) + np.diag(rng.uniform(0.5, 2.0, n))
    U = haar_orthogonal(n, seed + 1)
    A = L @ (np.eye(n) + (U * thetas) @ U.T) @ L.T
    Q = LowerTriFactor(n=n, kind="exact-cholesky", dense_values=L)
    return A, Q


class TestErrorCore:
    def test_exact_factor_gives_zero_core(self):
        rng = np.random.default_rng(0)
        A = random_spd(15, rng)
        core = error_core(A, cholesky(A))
        assert np.abs(core.thetas).max() <= 1e-10

    def test_identity_factor_shifts_by_one(self):
        core = error_core(np.diag([2.0, 1.0]), identity_factor(2))
        np.testing.assert_allclose(core.thetas, [1.0, 0.0], atol=1e-14)

    def test_planted_spectrum_and_gamma_order(self):
        A, Q = _planted_core([0.5, -0.45, 0.1], seed=4)
        core = error_core(A, Q)
        np.testing.assert_allclose(np.sort(core.thetas), [-0.45, 0.1, 0.5], rtol=1e-9, atol=1e-11)
        # gamma(-0.45) = 0.1478 > gamma(0.5) = 0.0945 > gamma(0.1) = 0.0047
        ordered = core.thetas[core.gamma_order]
        np.testing.assert_allclose(ordered, [-0.45, 0.5, 0.1], rtol=1e-9, atol=1e-11)

    def test_indefinite_rejected(self):
        A, Q = _planted_core([-1.5, 0.2], seed=1)
        with pytest.raises(NotPositiveDefiniteError):
            error_core(A, Q)

    def test_gamma_tie_breaks_by_theta_then_index(self):
        # equal gamma values (identical thetas): order by index, deterministic
        core = error_core(np.diag([1.5, 1.5, 1.25]), identity_factor(3))
        assert core.thetas.tolist() == [0.5, 0.5, 0.25]
        assert core.gamma_order.tolist() == [0, 1, 2]


class TestTruncations:
    def test_rank_zero_is_empty(self):
        A, Q = _planted_core([0.4, -0.2, 0.1], seed=2)
        core = error_core(A, Q)
        term = bld_truncate(core, 0)
        assert term.V.shape == (3, 0)
        P = Preconditioner(Q, term, 1.0)
        np.testing.assert_allclose(P.dense(), Q.to_dense() @ Q.to_dense().T, rtol=1e-12)

    def test_bld_prefers_gamma_dominant_negative(self):
        A, Q = _planted_core([0.5, -0.45], seed=3)
        core = error_core(A, Q)
        bld = bld_truncate(core, 1)
        tsvd = tsvd_truncate(core, 1)
        assert bld.D[0] == pytest.approx(-0.45, rel=1e-9)
        assert tsvd.D[0] == pytest.approx(0.5, rel=1e-9)

    def test_bld_takes_large_positive_when_gamma_dominates(self):
        A, Q = _planted_core([3.0, 0.5, -0.2], seed=5)
        core = error_core(A, Q)
        term = bld_truncate(core, 1)
        assert term.D[0] == pytest.approx(3.0, rel=1e-9)

    def test_tsvd_tie_breaks_toward_positive(self):
        # exact magnitude tie, built directly so no eigensolve noise breaks it
        core = error_core(np.diag([1.5, 0.5, 1.25]), identity_factor(3))
        assert core.thetas.tolist() == [0.5, 0.25, -0.5]
        term = tsvd_truncate(core, 1)
        assert term.D[0] == 0.5

    def test_rank_bounds(self):
        A, Q = _planted_core([0.4, -0.2, 0.1], seed=7)
        core = error_core(A, Q)
        with pytest.raises(RankError):
            bld_truncate(core, 3)
        with pytest.raises(RankError):
            tsvd_truncate(core, -1)

    def test_orthonormal_columns(self):
        A, Q = _planted_core(np.linspace(-0.4, 2.0, 12), seed=8)
        core = error_core(A, Q)
        term = bld_truncate(core, 5)
        assert np.abs(term.V.T @ term.V - np.eye(5)).max() <= 1e-10


class TestOptimalAlpha:
    def test_exact_factor_gives_one(self):
        rng = np.random.default_rng(9)
        A = random_spd(10, rng)
        core = error_core(A, cholesky(A))
        for r in (0, 3):
            assert optimal_alpha(core, bld_truncate(core, r)) == pytest.approx(1.0, abs=1e-9)

    def test_mean_of_remaining(self):
        A, Q = _planted_core([3.0, 0.5, -0.2], seed=10)
        core = error_core(A, Q)
        term = bld_truncate(core, 1)
        assert optimal_alpha(core, term) == pytest.approx((1.5 + 0.8) / 2.0, rel=1e-9)

    def test_three_expressions_agree(self):
        A = make_sparse_network(60, seed=11)
        core = error_core(A, ic0(A))
        term = bld_truncate(core, 6)
        a1 = optimal_alpha(core, term)
        # trace(P^-1 A) route
        P = Preconditioner(core.factor, term, 1.0)
        n = 60
        tr = sum(float(np.eye(n)[:, i] @ P.apply_inverse(A.matvec(np.eye(n)[:, i]))) for i in range(n))
        a2 = (tr - term.r) / (n - term.r)
        # trace((I+E)(I - VV')) route
        E = np.zeros((n, n))
        E[np.diag_indices(n)] = 0.0
        W = np.eye(n) - term.V @ term.V.T
        IE = (core.eig.vectors * (1.0 + core.thetas)) @ core.eig.vectors.T
        a3 = float(np.trace(IE @ W)) / (n - term.r)
        assert a2 == pytest.approx(a1, rel=1e-10)
        assert a3 == pytest.approx(a1, rel=1e-10)


class TestPreconditionerApply:
    def test_identity(self):
        P = Preconditioner(identity_factor(4), _empty_term(4), 1.0)
        x = np.arange(1.0, 5.0)
        np.testing.assert_allclose(P.apply_inverse(x), x)

    def test_scalar_alpha(self):
        P = Preconditioner(identity_factor(4), _empty_term(4), 2.0)
        x = np.arange(1.0, 5.0)
        np.testing.assert_allclose(P.apply_inverse(x), x / 2.0)

    def test_roundtrip_with_low_rank(self):
        A = make_sparse_network(50, seed=12)
        core = error_core(A, ic0(A))
        term = bld_truncate(core, 5)
        P = Preconditioner(core.factor, term, optimal_alpha(core, term))
        rng = np.random.default_rng(13)
        x = rng.standard_normal(50)
        back = P.apply(P.apply_inverse(x))
        assert np.linalg.norm(back - x) <= 1e-10 * np.linalg.norm(x)
        # and against the dense assembly
        np.testing.assert_allclose(P.dense() @ P.apply_inverse(x), x, rtol=1e-9, atol=1e-11)

    def test_alpha_one_matches_plain_correction(self):
        A, Q = _planted_core([0.6, -0.3, 0.2, 0.05], seed=14)
        core = error_core(A, Q)
        term = bld_truncate(core, 2)
        P = Preconditioner(Q, term, 1.0)
        direct = Q.to_dense() @ (np.eye(4) + (term.V * term.D) @ term.V.T) @ Q.to_dense().T
        np.testing.assert_allclose(P.dense(), direct, rtol=1e-12, atol=1e-13)

    def test_inv_sqrt_composition(self):
        A = make_sparse_network(40, seed=15)
        core = error_core(A, ic0(A))
        term = bld_truncate(core, 4)
        P = Preconditioner(core.factor, term, 1.3)
        rng = np.random.default_rng(16)
        x = rng.standard_normal(40)
        # C^-T C^-1 = P^-1 for the split square factor C
        via_split = P.apply_inv_sqrt_t(P.apply_inv_sqrt(x))
        np.testing.assert_allclose(via_split, P.apply_inverse(x), rtol=1e-11, atol=1e-13)


def _empty_term(n):
    from bld_kaporin.precond import LowRankTerm

    return LowRankTerm(r=0, V=np.zeros((n, 0)), D=np.zeros(0), selection=np.zeros(0, dtype=int))


class TestAlphaFunctionals:
    def setup_method(self):
        # remaining spectrum (1.5, 0.5) after the BLD pick of theta = 3
        self.A, self.Q = _planted_core([3.0, 0.5, -0.5], seed=17)
        self.core = error_core(self.A, self.Q)
        self.term = bld_truncate(self.core, 1)
        assert self.term.D[0] == pytest.approx(3.0, rel=1e-9)

    def test_divergence_at_alpha_star(self):
        a_star = optimal_alpha(self.core, self.term)
        assert a_star == pytest.approx(1.0, rel=1e-9)
        d = divergence_alpha(self.core, self.term, a_star)
        assert d == pytest.approx(-math.log(0.75), rel=1e-9)

    def test_divergence_zero_core(self):
        rng = np.random.default_rng(18)
        A = random_spd(8, rng)
        core = error_core(A, cholesky(A))
        term = bld_truncate(core, 2)
        assert divergence_alpha(core, term, 1.0) <= 1e-12
        for alpha in (0.5, 2.0):
            expected = 6 * (1.0 / alpha + math.log(alpha) - 1.0)
            assert divergence_alpha(core, term, alpha) == pytest.approx(expected, rel=1e-7)

    def test_strict_convexity_off_minimum(self):
        a_star = optimal_alpha(self.core, self.term)
        d_star = divergence_alpha(self.core, self.term, a_star)
        assert divergence_alpha(self.core, self.term, 2 * a_star) > d_star
        assert divergence_alpha(self.core, self.term, a_star / 2) > d_star

    def test_ln_kaporin_equals_divergence_at_star(self):
        a_star = optimal_alpha(self.core, self.term)
        d = divergence_alpha(self.core, self.term, a_star)
        lk = ln_kaporin_alpha(self.core, self.term, a_star)
        assert lk == pytest.approx(-math.log(0.75), rel=1e-9)
        assert lk == pytest.approx(d, abs=1e-10)

    def test_ln_kaporin_logdet_route(self):
        a_star = optimal_alpha(self.core, self.term)
        P1 = Preconditioner(self.Q, self.term, 1.0)
        route = -preconditioned_logdet(self.A, P1) + 2 * math.log(a_star)
        assert ln_kaporin_alpha(self.core, self.term, a_star) == pytest.approx(route, abs=1e-10)

    def test_kappa2_flat_and_outside(self):
        for alpha in (0.5, 1.0, 1.5):
            assert kappa2_alpha(self.core, self.term, alpha) == pytest.approx(3.0, rel=1e-12)
        assert kappa2_alpha(self.core, self.term, 3.0) == pytest.approx(6.0, rel=1e-12)
        assert kappa2_alpha(self.core, self.term, 0.25) == pytest.approx(6.0, rel=1e-12)

    def test_flat_interval_values(self):
        lo, hi = flat_interval(self.core, self.term)
        assert (lo, hi) == (pytest.approx(0.5, rel=1e-9), pytest.approx(1.5, rel=1e-9))

    def test_alpha_domain(self):
        with pytest.raises(DomainError):
            divergence_alpha(self.core, self.term, 0.0)
        with pytest.raises(DomainError):
            ln_kaporin_alpha(self.core, self.term, -1.0)


class TestInvariantsOnRandomInstances:
    def test_grid_optimality_and_four_way(self):
        for seed in range(6):
            A = make_sparse_network(45 + 5 * seed, seed=100 + seed)
            n = A.n
            core = error_core(A, ic0(A))
            for r in (0, n // 10, n // 4):
                term = bld_truncate(core, r)
                a_star = optimal_alpha(core, term)
                d_star = divergence_alpha(core, term, a_star)
                grid = np.geomspace(a_star / 4, a_star * 4, 101)
                dvals = np.array([divergence_alpha(core, term, a) for a in grid])
                assert dvals.min() >= d_star - 1e-12
                off = grid[np.abs(grid - a_star) > 1e-3 * a_star]
                assert all(divergence_alpha(core, term, a) > d_star for a in off)
                # four-way identity
                lk = ln_kaporin_alpha(core, term, a_star)
                P_star = Preconditioner(core.factor, term, a_star)
                P_one = Preconditioner(core.factor, term, 1.0)
                neg_ld = -preconditioned_logdet(A, P_star)
                via = -preconditioned_logdet(A, P_one) + (n - r) * math.log(a_star)
                vals = [d_star, lk, neg_ld, via]
                assert max(vals) - min(vals) <= 1e-9 * max(abs(d_star), 1.0)

    def test_alpha_star_inside_interval(self):
        for seed in range(6):
            A = make_sparse_network(40, seed=200 + seed)
            core = error_core(A, ic0(A))
            term = bld_truncate(core, 6)
            lo, hi = flat_interval(core, term)
            a_star = optimal_alpha(core, term)
            assert lo <= a_star <= hi

    def test_bld_beats_tsvd_every_rank(self):
        for seed in range(5):
            A, Q = _planted_core(np.random.default_rng(300 + seed).uniform(-0.6, 2.0, 14), seed=seed)
            core = error_core(A, Q)
            for r in range(14):
                d_bld = divergence_alpha(core, bld_truncate(core, r), 1.0)
                d_tsvd = divergence_alpha(core, tsvd_truncate(core, r), 1.0)
                assert d_bld <= d_tsvd + 1e-12

    def test_dense_divergence_consistency(self):
        A = make_sparse_network(35, seed=400)
        core = error_core(A, ic0(A))
        term = bld_truncate(core, 5)
        for alpha in (0.8, 1.0, optimal_alpha(core, term)):
            P = Preconditioner(core.factor, term, alpha)
            d_dense = bregman_logdet(A.to_dense(), P.dense())
            assert d_dense == pytest.approx(divergence_alpha(core, term, alpha), rel=1e-8)

    def test_quadratic_error_order(self):
        rng = np.random.default_rng(500)
        n = 30
        X = rng.standard_normal((n, n))
        X = 0.5 * (X + X.T)
        X /= np.abs(np.linalg.eigvalsh(X)).max()
        assert abs(np.trace(X)) > 0.25
        eps_list = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
        errs = []
        for eps in eps_list:
            A = np.eye(n) + eps * X
            core = error_core(A, identity_factor(n))
            term = bld_truncate(core, 0)
            errs.append(abs(ln_kaporin_alpha(core, term, 1.0) - divergence_alpha(core, term, 1.0)))
        slope = np.polyfit(np.log(eps_list), np.log(errs), 1)[0]
        assert 1.8 <= slope <= 2.2

    def test_sym_operator_matches_dense_similarity(self):
        A = make_sparse_network(30, seed=600)
        core = error_core(A, ic0(A))
        term = bld_truncate(core, 4)
        P = Preconditioner(core.factor, term, 1.2)
        op = sym_preconditioned_operator(A, P)
        M = np.column_stack([op(e) for e in np.eye(30)])
        Pd = P.dense()
        ref_spec = np.sort(np.linalg.eigvalsh(0.5 * (M + M.T)))
        direct = np.sort(np.real(np.linalg.eigvals(np.linalg.solve(Pd, A.to_dense()))))
        np.testing.assert_allclose(ref_spec, direct, rtol=1e-8, atol=1e-10)


class TestScaleToUnitTrace:
    def test_already_normalized(self):
        A = np.diag([1.5, 0.5])
        c, cP = scale_to_unit_trace(A, np.eye(2))
        assert c == pytest.approx(1.0, rel=1e-12)

    def test_half_matrix(self):
        rng = np.random.default_rng(19)
        A = random_spd(9, rng)
        c, cP = scale_to_unit_trace(A, A / 2.0)
        assert c == pytest.approx(2.0, rel=1e-10)
        np.testing.assert_allclose(cP, A, rtol=1e-10)
        assert bregman_logdet(A, cP) <= 1e-9

    def test_postconditions_random(self):
        rng = np.random.default_rng(20)
        from bld_kaporin.divergence import ln_kaporin_k, preconditioned_spectrum

        for _ in range(8):
            n = int(rng.integers(3, 25))
            A, P = random_spd(n, rng), random_spd(n, rng)
            c, cP = scale_to_unit_trace(A, P)
            spec = preconditioned_spectrum(A, cP)
            assert spec.sum() == pytest.approx(n, rel=1e-10)
            d = bregman_logdet(A, cP)
            lk = ln_kaporin_k(spec.sum(), np.log(spec).sum(), n)
            assert d == pytest.approx(lk, abs=1e-10 * n)
