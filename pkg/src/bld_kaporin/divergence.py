"""Scalar functionals of SPD matrices.

Covers the spectral condition number, the arithmetic/geometric eigenvalue
mean ratio and its n-th power in log form, the log-determinant matrix
divergence in two evaluation forms, the scalar curve gamma(t) = t - log(1+t),
dual (negative-definite) coordinates and the conjugate divergence, the first
antieigenvalue, and symmetric diagonal (Jacobi) scaling.

Conventions:
  * d_ld(A, P) = trace(A P^-1) - log det(A P^-1) - n  >= 0, zero iff A = P.
  * Kaporin quantities are exposed in log space only; exponentiating
    n * ln B overflows for modest n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, NotPositiveDefiniteError
from .matio import SparseSymMatrix

__all__ = [
    "ConditionReport",
    "kappa2",
    "kaporin_b",
    "ln_kaporin_k",
    "bregman_logdet",
    "gamma_map",
    "dual_coords",
    "dual_divergence",
    "antieigen_cos",
    "jacobi_scale",
    "condition_report",
    "spd_cholesky",
    "logdet_spd",
    "preconditioned_spectrum",
]


def _positive_spectrum(spectrum) -> np.ndarray:
    s = np.asarray(spectrum, dtype=np.float64).ravel()
    if s.size == 0:
        raise DomainError("empty spectrum")
    if np.any(s <= 0.0):
        raise DomainError("spectrum must be strictly positive")
    return s


def kappa2(spectrum) -> float:
    """Spectral condition number max(spectrum)/min(spectrum)."""
    s = _positive_spectrum(spectrum)
    return float(s.max() / s.min())


def kaporin_b(spectrum) -> float:
    """Arithmetic mean of the eigenvalues over their geometric mean; >= 1."""
    s = _positive_spectrum(spectrum)
    return float(np.mean(s) / np.exp(np.mean(np.log(s))))


def ln_kaporin_k(trace_m, logdet_m, n) -> float:
    """n*ln(trace/n) - logdet, the log of B(M)^n.

    Evaluated directly in log space; the n-th power itself overflows for
    spectra of any realistic size.
    """
    if trace_m <= 0.0:
        raise DomainError("trace must be positive")
    n = int(n)
    return float(n * np.log(trace_m / n) - logdet_m)


def gamma_map(lam):
    """Scalar penalty curve t - log(1+t) on (-1, inf).

    Nonnegative, zero only at 0, strictly decreasing on (-1, 0) and
    strictly increasing on (0, inf).  Accepts scalars or arrays.
    """
    arr = np.asarray(lam, dtype=np.float64)
    if np.any(arr <= -1.0):
        raise DomainError("gamma_map requires arguments > -1")
    out = arr - np.log1p(arr)
    return float(out) if np.isscalar(lam) or arr.ndim == 0 else out


def spd_cholesky(X, what="matrix") -> np.ndarray:
    """Cholesky factor of a dense SPD matrix, used as the SPD validator."""
    X = np.asarray(X, dtype=np.float64)
    try:
        return np.linalg.cholesky(0.5 * (X + X.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


def logdet_spd(X) -> float:
    """log det of an SPD matrix via its Cholesky diagonal."""
    L = spd_cholesky(X)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _as_dense(P) -> np.ndarray:
    if hasattr(P, "dense") and callable(P.dense):
        return np.asarray(P.dense(), dtype=np.float64)
    if isinstance(P, SparseSymMatrix):
        return P.to_dense()
    return np.asarray(P, dtype=np.float64)


def bregman_logdet(A, P, method="dense-direct") -> float:
    """Log-determinant matrix divergence between SPD matrices A and P.

    dense-direct evaluates trace(A P^-1) - logdet(A P^-1) - n through
    Cholesky solves.  eigen-sum evaluates the equivalent double sum
    sum_ij (u_i . v_j)^2 (xi_i/omega_j - log(xi_i/omega_j) - 1) over both
    eigensystems; it is cubic with large constants and exists as an
    independent cross-check.
    """
    A = _as_dense(A)
    P = _as_dense(P)
    n = A.shape[0]
    if P.shape != A.shape:
        raise ValueError("A and P must have matching shape")
    if method == "dense-direct":
        La = spd_cholesky(A, "A")
        Lp = spd_cholesky(P, "P")
        # trace(A P^-1) via the factor: ||Lp^-1 La||_F^2
        Z = sla.solve_triangular(Lp, La, lower=True)
        trace_m = float(np.sum(Z * Z))
        logdet_m = 2.0 * float(np.sum(np.log(np.diag(La))) - np.sum(np.log(np.diag(Lp))))
        return trace_m - logdet_m - n
    if method == "eigen-sum":
        from .linalg import sym_eig

        spd_cholesky(A, "A")
        spd_cholesky(P, "P")
        ea = sym_eig(A)
        ep = sym_eig(P)
        overlap = (ea.vectors.T @ ep.vectors) ** 2
        ratio = ea.values[:, None] / ep.values[None, :]
        return float(np.sum(overlap * (ratio - np.log(ratio) - 1.0)))
    raise ValueError(f"unknown method {method!r}")


def dual_coords(X) -> np.ndarray:
    """Dual coordinates -X^-1 of an SPD matrix (negative definite)."""
    X = np.asarray(X, dtype=np.float64)
    L = spd_cholesky(X)
    inv = sla.cho_solve((L, True), np.eye(X.shape[0]))
    inv = 0.5 * (inv + inv.T)
    return -inv


def dual_divergence(theta, sigma) -> float:
    """Conjugate-seed divergence on negative definite arguments.

    With phi*(X) = -n - log det(-X) and grad phi*(S) = -S^-1:
    phi*(theta) - phi*(sigma) - trace(-sigma^-1 (theta - sigma)).
    Equals bregman_logdet(A, B) at theta = B*, sigma = A*.
    """
    theta = np.asarray(theta, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    n = theta.shape[0]
    Lt = spd_cholesky(-theta, "first argument (negated)")
    Ls = spd_cholesky(-sigma, "second argument (negated)")
    phi_t = -n - 2.0 * float(np.sum(np.log(np.diag(Lt))))
    phi_s = -n - 2.0 * float(np.sum(np.log(np.diag(Ls))))
    # grad phi*(sigma) = -sigma^-1 = (-sigma)^-1
    grad = sla.cho_solve((Ls, True), np.eye(n))
    return phi_t - phi_s - float(np.sum(grad * (theta - sigma)))


def antieigen_cos(lambda1, lambda_n) -> float:
    """First antieigenvalue 2 sqrt(l1 ln) / (l1 + ln) in (0, 1].

    For a 2x2 SPD spectrum its reciprocal is kaporin_b.
    """
    if lambda_n <= 0.0 or lambda1 < lambda_n:
        raise DomainError("need lambda1 >= lambda_n > 0")
    return float(2.0 * np.sqrt(lambda1 * lambda_n) / (lambda1 + lambda_n))


def jacobi_scale(A):
    """Symmetric diagonal scaling diag(A)^-1/2 A diag(A)^-1/2.

    The result has a unit diagonal, hence trace exactly n.  Accepts a
    SparseSymMatrix (returned as such) or a dense array.
    """
    if isinstance(A, SparseSymMatrix):
        d = A.diagonal()
        if np.any(d <= 0.0):
            raise DomainError("jacobi scaling requires a positive diagonal")
        s = 1.0 / np.sqrt(d)
        coo = A.lower.tocoo()
        vals = coo.data * s[coo.row] * s[coo.col]
        return SparseSymMatrix.from_coo(A.n, coo.row, coo.col, vals)
    A = np.asarray(A, dtype=np.float64)
    d = np.diag(A).copy()
    if np.any(d <= 0.0):
        raise DomainError("jacobi scaling requires a positive diagonal")
    s = 1.0 / np.sqrt(d)
    return A * np.outer(s, s)


def preconditioned_spectrum(A, P) -> np.ndarray:
    """Spectrum of P^-1 A computed from the symmetric form.

    Uses Lp^-1 A Lp^-T with P = Lp Lp^T, which is similar to P^-1 A but
    keeps the eigensolver on symmetric input.
    """
    from .linalg import sym_eig

    A = _as_dense(A)
    Lp = spd_cholesky(_as_dense(P), "P")
    Y = sla.solve_triangular(Lp, A, lower=True)
    M = sla.solve_triangular(Lp, Y.T, lower=True).T
    return sym_eig(0.5 * (M + M.T)).values


@dataclass(frozen=True)
class ConditionReport:
    """Bundle of conditioning functionals of one preconditioned matrix M.

    Satisfies, up to roundoff: ln_kaporin_k = n*ln(kaporin_b);
    d_ld = trace_m - logdet_m - n; and the chain
    kaporin_b <= kappa2 <= (sqrt k2 + 1/sqrt k2)^2 <= 4 K (last link in
    log space).
    """

    n: int
    kappa2: float
    kaporin_b: float
    ln_kaporin_k: float
    d_ld: float
    trace_m: float
    logdet_m: float


def condition_report(A, P=None) -> ConditionReport:
    """Evaluate every conditioning functional for M = P^-1 A (P = I default)."""
    A = _as_dense(A)
    n = A.shape[0]
    if P is None:
        spec = np.sort(np.linalg.eigvalsh(0.5 * (A + A.T)))[::-1]
        if np.any(spec <= 0.0):
            raise NotPositiveDefiniteError("A is not positive definite")
    else:
        spec = preconditioned_spectrum(A, P)
        if np.any(spec <= 0.0):
            raise NotPositiveDefiniteError("preconditioned matrix is not positive definite")
    trace_m = float(np.sum(spec))
    logdet_m = float(np.sum(np.log(spec)))
    return ConditionReport(
        n=n,
        kappa2=kappa2(spec),
        kaporin_b=kaporin_b(spec),
        ln_kaporin_k=ln_kaporin_k(trace_m, logdet_m, n),
        d_ld=trace_m - logdet_m - n,
        trace_m=trace_m,
        logdet_m=logdet_m,
    )
