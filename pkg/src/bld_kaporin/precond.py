"""Low-rank corrections of an approximate factorization, selected by the
log-determinant penalty, and the scaled preconditioner family P_alpha.

Given A = Q(I + E)Q^T with E = Q^-1 A Q^-T - I, a rank-r eigencorrection
keeps the r eigenpairs of E whose eigenvalues score highest under
gamma(t) = t - log(1+t) (each unselected eigenvalue contributes exactly
gamma(theta_i) to the divergence).  The orthogonal complement may be
rescaled by alpha:

    P_alpha = Q(alpha (I - V V^T) + V (I_r + D) V^T) Q^T.

alpha_star, the mean of the unselected 1 + theta_i, is the unique
divergence minimizer over alpha and makes the divergence equal the log
Kaporin condition number of the preconditioned matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .divergence import gamma_map, ln_kaporin_k, logdet_spd, spd_cholesky
from .errors import DomainError, NotPositiveDefiniteError, RankError
from .linalg import EigenDecomposition, LowerTriFactor, sym_eig, tri_solve
from .matio import SparseSymMatrix

__all__ = [
    "ErrorCore",
    "LowRankTerm",
    "Preconditioner",
    "error_core",
    "bld_truncate",
    "tsvd_truncate",
    "optimal_alpha",
    "apply_inverse",
    "divergence_alpha",
    "ln_kaporin_alpha",
    "kappa2_alpha",
    "flat_interval",
    "scale_to_unit_trace",
    "sym_preconditioned_operator",
]


@dataclass(frozen=True)
class ErrorCore:
    """Eigendecomposition of E = Q^-1 A Q^-T - I with the gamma ordering.

    eig.values are algebraically non-increasing; gamma_order permutes
    their indices so gamma(theta) is non-increasing along it (ties: larger
    theta first, then lower index).
    """

    n: int
    eig: EigenDecomposition
    gamma_order: np.ndarray
    factor: LowerTriFactor = field(repr=False)

    @property
    def thetas(self) -> np.ndarray:
        return self.eig.values


@dataclass(frozen=True)
class LowRankTerm:
    """Selected eigenpairs (V, D) of the error core; V D V^T is the correction.

    selection indexes into the core's eigendecomposition; V has orthonormal
    columns and every 1 + D entry is positive.
    """

    r: int
    V: np.ndarray
    D: np.ndarray
    selection: np.ndarray

    def remaining(self, core: ErrorCore) -> np.ndarray:
        """Unselected eigenvalues of the core, in eigendecomposition order."""
        mask = np.ones(core.n, dtype=bool)
        mask[self.selection] = False
        return core.thetas[mask]


def error_core(A, Q: LowerTriFactor) -> ErrorCore:
    """Form and eigendecompose E = Q^-1 A Q^-T - I.

    Fails with NotPositiveDefiniteError when any eigenvalue of E is at or
    below -1, i.e. when A is not SPD relative to the factor.
    """
    Ad = A.to_dense() if isinstance(A, SparseSymMatrix) else np.asarray(A, dtype=np.float64)
    n = Ad.shape[0]
    if Q.n != n:
        raise ValueError("factor order does not match the matrix")
    Y = tri_solve(Q, Ad, "forward")          # Q^-1 A
    E = tri_solve(Q, Y.T, "forward").T       # Q^-1 A Q^-T
    E = 0.5 * (E + E.T) - np.eye(n)
    eig = sym_eig(E)
    if np.any(eig.values <= -1.0 + 1e-12):
        raise NotPositiveDefiniteError("error core has eigenvalues <= -1: A is not SPD")
    gammas = gamma_map(eig.values)
    order = np.lexsort((np.arange(n), -eig.values, -gammas))
    return ErrorCore(n=n, eig=eig, gamma_order=order, factor=Q)


def _take(core: ErrorCore, selection: np.ndarray, r: int) -> LowRankTerm:
    return LowRankTerm(
        r=r,
        V=core.eig.vectors[:, selection].copy(),
        D=core.thetas[selection].copy(),
        selection=selection.copy(),
    )


def bld_truncate(core: ErrorCore, r: int) -> LowRankTerm:
    """Keep the r eigenpairs whose eigenvalues are largest under gamma."""
    r = int(r)
    if not 0 <= r < core.n:
        raise RankError(f"rank must satisfy 0 <= r < {core.n}")
    return _take(core, core.gamma_order[:r], r)


def tsvd_truncate(core: ErrorCore, r: int) -> LowRankTerm:
    """Keep the r eigenpairs largest in magnitude (the TSVD selection).

    Ties break toward the positive eigenvalue, then the lower index.
    """
    r = int(r)
    if not 0 <= r < core.n:
        raise RankError(f"rank must satisfy 0 <= r < {core.n}")
    th = core.thetas
    order = np.lexsort((np.arange(core.n), -np.sign(th), -np.abs(th)))
    return _take(core, order[:r], r)


def optimal_alpha(core: ErrorCore, term: LowRankTerm) -> float:
    """Divergence-minimizing complement scaling: mean of unselected 1+theta."""
    if term.r >= core.n:
        raise RankError("rank must be below the order")
    return float(np.mean(1.0 + term.remaining(core)))


@dataclass(frozen=True)
class Preconditioner:
    """P_alpha = Q(alpha (I - V V^T) + V (I_r + D) V^T) Q^T, SPD throughout.

    alpha = 1 gives the plain low-rank corrected factorization
    P = Q(I + V D V^T) Q^T.  Immutable; apply_inverse is reentrant.
    """

    factor: LowerTriFactor
    low_rank: LowRankTerm
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise DomainError("alpha must be positive")
        if np.any(1.0 + self.low_rank.D <= 0.0):
            raise DomainError("I + D must be positive definite")

    @property
    def n(self) -> int:
        return self.factor.n

    def apply_inverse(self, x) -> np.ndarray:
        """P_alpha^-1 x via two triangular solves and a rank-r update."""
        y = tri_solve(self.factor, np.asarray(x, dtype=np.float64), "forward")
        V, D = self.low_rank.V, self.low_rank.D
        t = V.T @ y
        z = (y - V @ t) / self.alpha + V @ (t / (1.0 + D))
        return tri_solve(self.factor, z, "adjoint")

    def apply(self, x) -> np.ndarray:
        """P_alpha x, the inverse of apply_inverse."""
        z = self.factor.matvec(np.asarray(x, dtype=np.float64), "adjoint")
        V, D = self.low_rank.V, self.low_rank.D
        t = V.T @ z
        w = self.alpha * (z - V @ t) + V @ ((1.0 + D) * t)
        return self.factor.matvec(w, "forward")

    def apply_inv_sqrt(self, x) -> np.ndarray:
        """S^-1 Q^-1 x where Q S (S^2 = middle term) is a square factor of P_alpha."""
        y = tri_solve(self.factor, np.asarray(x, dtype=np.float64), "forward")
        V, D = self.low_rank.V, self.low_rank.D
        t = V.T @ y
        return (y - V @ t) / np.sqrt(self.alpha) + V @ (t / np.sqrt(1.0 + D))

    def apply_inv_sqrt_t(self, x) -> np.ndarray:
        """Q^-T S^-1 x, the adjoint of apply_inv_sqrt."""
        x = np.asarray(x, dtype=np.float64)
        V, D = self.low_rank.V, self.low_rank.D
        t = V.T @ x
        z = (x - V @ t) / np.sqrt(self.alpha) + V @ (t / np.sqrt(1.0 + D))
        return tri_solve(self.factor, z, "adjoint")

    def dense(self) -> np.ndarray:
        Qd = self.factor.to_dense()
        V, D = self.low_rank.V, self.low_rank.D
        mid = self.alpha * (np.eye(self.n) - V @ V.T) + V @ np.diag(1.0 + D) @ V.T
        return Qd @ mid @ Qd.T

    def logdet(self) -> float:
        """log det P_alpha from the factor diagonal and the middle spectrum."""
        r = self.low_rank.r
        return (
            self.factor.logdet_gram()
            + (self.n - r) * float(np.log(self.alpha))
            + float(np.sum(np.log(1.0 + self.low_rank.D)))
        )


def apply_inverse(P: Preconditioner, x) -> np.ndarray:
    return P.apply_inverse(x)


def divergence_alpha(core: ErrorCore, term: LowRankTerm, alpha: float) -> float:
    """Divergence of (A, P_alpha): sum of gamma((1+theta_i)/alpha - 1) over
    the unselected indices.  Selected indices contribute zero."""
    if alpha <= 0.0:
        raise DomainError("alpha must be positive")
    ratios = (1.0 + term.remaining(core)) / alpha
    # each summand is >= 0; the sum can round to -1e-16 near an exact factor
    return max(0.0, float(np.sum(ratios - np.log(ratios) - 1.0)))


def ln_kaporin_alpha(core: ErrorCore, term: LowRankTerm, alpha: float) -> float:
    """ln K of P_alpha^-1 A from its exact spectrum {1 (x r)} u {(1+theta)/alpha}."""
    if alpha <= 0.0:
        raise DomainError("alpha must be positive")
    spec = np.concatenate((np.ones(term.r), (1.0 + term.remaining(core)) / alpha))
    return max(0.0, ln_kaporin_k(float(np.sum(spec)), float(np.sum(np.log(spec))), core.n))


def flat_interval(core: ErrorCore, term: LowRankTerm) -> tuple[float, float]:
    """[min, max] of the unselected 1+theta: the kappa2-flat alpha range."""
    rem = 1.0 + term.remaining(core)
    if rem.size == 0:
        raise RankError("rank equals the order: no remaining spectrum")
    return float(rem.min()), float(rem.max())


def kappa2_alpha(core: ErrorCore, term: LowRankTerm, alpha: float) -> float:
    """Spectral condition number of the P_alpha-preconditioned matrix.

    Equals max(1, L/alpha)/min(1, l/alpha) with [l, L] the flat interval;
    constant (= L/l) for alpha inside it.
    """
    if alpha <= 0.0:
        raise DomainError("alpha must be positive")
    lo, hi = flat_interval(core, term)
    return float(max(1.0, hi / alpha) / min(1.0, lo / alpha))


def scale_to_unit_trace(A, P):
    """Rescale P so trace((cP)^-1 A) = n; returns (c, cP) for dense inputs."""
    A = np.asarray(A, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    n = A.shape[0]
    Lp = spd_cholesky(P, "P")
    Z = sla.solve_triangular(Lp, spd_cholesky(A, "A"), lower=True)
    c = float(np.sum(Z * Z)) / n
    return c, c * P


def sym_preconditioned_operator(A, P: Preconditioner):
    """Matvec closure for the SPD matrix similar to P_alpha^-1 A.

    Applies S^-1 Q^-1 A Q^-T S^-1 where Q S is a square factor of
    P_alpha; trace and log-det match those of P_alpha^-1 A exactly.
    """
    matvec = A.matvec if isinstance(A, SparseSymMatrix) else (lambda x: np.asarray(A) @ x)

    def op(x):
        return P.apply_inv_sqrt(matvec(P.apply_inv_sqrt_t(x)))

    return op


def preconditioned_logdet(A, P: Preconditioner) -> float:
    """Exact log det(P_alpha^-1 A) via dense Cholesky of A and P's structure."""
    Ad = A.to_dense() if isinstance(A, SparseSymMatrix) else np.asarray(A, dtype=np.float64)
    return logdet_spd(Ad) - P.logdet()
