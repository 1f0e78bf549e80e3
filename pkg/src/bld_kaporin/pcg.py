"""Preconditioned conjugate gradients with per-iteration instrumentation,
plus the residual/error bound curves and iteration-count estimates that go
with the spectral, Kaporin, and divergence condition measures.

The solver implements the textbook recursion

    r0 = b - A x0;  p0 = H r0
    a_k = (r_k' H r_k)/(p_k' A p_k)
    x_{k+1} = x_k + a_k p_k;  r_{k+1} = r_k - a_k A p_k
    b_k = (r_{k+1}' H r_{k+1})/(r_k' H r_k);  p_{k+1} = H r_{k+1} + b_k p_k

and stops on the relative 2-norm residual.  The H-norm of the residual
(the norm the Kaporin-style bounds are stated in) reuses the r' H r values
the recursion computes anyway, so tracking it is free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PcgBreakdownError
from .matio import SparseSymMatrix

__all__ = [
    "SolveConfig",
    "SolveReport",
    "pcg_solve",
    "bound_kappa",
    "bound_kaporin",
    "bound_divergence",
    "bound_3lnd",
    "kaporin_bound_useful",
    "iter_estimate_kappa",
    "iter_estimate_kaporin",
    "recommended_sigma",
    "iter_estimate_divergence",
]


@dataclass(frozen=True)
class SolveConfig:
    """Knobs for one PCG run.

    max_iter defaults to 10n.  known_solution enables A-norm error
    tracking.  record_history=False keeps only the iteration counters and
    the final iterate.
    """

    tol: float = 1e-10
    max_iter: int | None = None
    track_pinv_norm: bool = True
    known_solution: np.ndarray | None = None
    record_history: bool = True

    def __post_init__(self):
        if self.tol <= 0.0:
            raise DomainError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


@dataclass
class SolveReport:
    """History of one PCG run; index k = 0 holds the initial norms."""

    iterations: int
    converged: bool
    x: np.ndarray
    res2: np.ndarray
    res_pinv: np.ndarray | None = None
    err_a: np.ndarray | None = None

    def rel_res2(self) -> np.ndarray:
        return self.res2 / self.res2[0] if self.res2[0] != 0 else self.res2

    def rel_res_pinv(self) -> np.ndarray:
        if self.res_pinv is None:
            raise ValueError("P^-1 norm was not tracked")
        return self.res_pinv / self.res_pinv[0] if self.res_pinv[0] != 0 else self.res_pinv

    def rel_err_a(self) -> np.ndarray:
        if self.err_a is None:
            raise ValueError("no known solution was supplied")
        return self.err_a / self.err_a[0] if self.err_a[0] != 0 else self.err_a


def _as_matvec(A):
    if isinstance(A, SparseSymMatrix):
        return A.matvec, A.n
    if callable(A):
        raise TypeError("pass (apply, n) operators as SparseSymMatrix or ndarray")
    A = np.asarray(A, dtype=np.float64)
    return (lambda x: A @ x), A.shape[0]


def _as_apply_inverse(H):
    if H is None:
        return lambda x: x
    if hasattr(H, "apply_inverse"):
        return H.apply_inverse
    if callable(H):
        return H
    Hm = np.asarray(H, dtype=np.float64)
    return lambda x: Hm @ x


def pcg_solve(A, b, H=None, config: SolveConfig | None = None) -> SolveReport:
    """Solve Ax = b by PCG with preconditioner inverse H.

    A may be a SparseSymMatrix or dense array; H a Preconditioner, a
    callable applying P^-1, a dense matrix, or None for the identity.
    Raises PcgBreakdownError (with the partial report attached) when the
    curvature p' A p turns nonpositive.
    """
    cfg = config or SolveConfig()
    matvec, n = _as_matvec(A)
    apply_h = _as_apply_inverse(H)
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side must be finite")
    max_iter = cfg.max_iter if cfg.max_iter is not None else 10 * n

    x = np.zeros(n)
    r = b.copy()
    z = apply_h(r)
    rho = float(r @ z)
    p = z.copy()
    norm_b = float(np.linalg.norm(b))
    stop = cfg.tol * norm_b

    res2 = [float(np.linalg.norm(r))]
    res_pinv = [math.sqrt(max(rho, 0.0))] if cfg.track_pinv_norm else None
    err_a = None
    if cfg.known_solution is not None:
        xs = np.asarray(cfg.known_solution, dtype=np.float64)
        err_a = [_a_norm(matvec, xs - x)]

    converged = res2[0] <= stop
    k = 0
    while not converged and k < max_iter:
        Ap = matvec(p)
        curv = float(p @ Ap)
        if curv <= 0.0:
            report = _finish(x, k, False, res2, res_pinv, err_a, cfg)
            raise PcgBreakdownError(f"nonpositive curvature at iteration {k}", report)
        a = rho / curv
        x = x + a * p
        r = r - a * Ap
        k += 1
        res2.append(float(np.linalg.norm(r)))
        if err_a is not None:
            err_a.append(_a_norm(matvec, xs - x))
        z = apply_h(r)
        rho_next = float(r @ z)
        if res_pinv is not None:
            res_pinv.append(math.sqrt(max(rho_next, 0.0)))
        converged = res2[-1] <= stop
        if not converged:
            beta = rho_next / rho
            p = z + beta * p
        rho = rho_next

    return _finish(x, k, converged, res2, res_pinv, err_a, cfg)


def _a_norm(matvec, v) -> float:
    return math.sqrt(max(float(v @ matvec(v)), 0.0))


def _finish(x, k, converged, res2, res_pinv, err_a, cfg) -> SolveReport:
    if not cfg.record_history:
        res_pinv, err_a = None, None
    return SolveReport(
        iterations=k,
        converged=converged,
        x=x,
        res2=np.asarray(res2),
        res_pinv=None if res_pinv is None else np.asarray(res_pinv),
        err_a=None if err_a is None else np.asarray(err_a),
    )


# ---------------------------------------------------------------------------
# Bound curves


def bound_kappa(kappa2: float, k: int) -> float:
    """A-norm error bound 2/(C^k + C^-k), C = (sqrt(k2)-1)/(sqrt(k2)+1)."""
    if kappa2 < 1.0:
        raise DomainError("kappa2 >= 1 required")
    if k < 0:
        raise DomainError("k >= 0 required")
    if k == 0:
        return 1.0
    s = math.sqrt(kappa2)
    C = (s - 1.0) / (s + 1.0)
    if C == 0.0:
        return 0.0
    # 2/(C^k + C^-k) evaluated through the dominant C^-k term
    return 2.0 * C**k / (1.0 + C ** (2 * k))


def _log_expm1(y: float) -> float:
    """log(exp(y) - 1) without overflow for large y."""
    if y > 40.0:
        return y + math.log1p(-math.exp(-y))
    return math.log(math.expm1(y))


def _superlinear_bound(quantity: float, k: int) -> float:
    if k < 1:
        raise DomainError("k >= 1 required")
    if quantity < 0.0:
        raise DomainError("nonnegative conditioning quantity required")
    if quantity == 0.0:
        return 0.0
    log_bound = 0.5 * k * _log_expm1(quantity / k)
    if log_bound > 700.0:
        return math.inf
    return math.exp(log_bound)


def bound_kaporin(ln_k: float, k: int) -> float:
    """Residual bound (K^(1/k) - 1)^(k/2) in the P^-1 norm, from ln K."""
    return _superlinear_bound(ln_k, k)


def bound_divergence(d_ld: float, k: int) -> float:
    """Residual bound (e^(D/k) - 1)^(k/2); coincides with bound_kaporin
    when the preconditioned trace is n (D = ln K)."""
    return _superlinear_bound(d_ld, k)


def kaporin_bound_useful(ln_k: float, n: int) -> bool:
    """True when B(M) < 2, i.e. ln K < n ln 2: the bound can contract."""
    return ln_k < n * math.log(2.0)


def bound_3lnd(d_ld: float, k: int, n: int) -> float:
    """A-norm error bound (3 D / k)^(k/2), valid for even k with
    3 D <= k < n."""
    if d_ld < 0.0:
        raise DomainError("divergence must be nonnegative")
    if k < 1 or k % 2 != 0:
        raise DomainError("k must be a positive even integer")
    if not (3.0 * d_ld <= k and k < n):
        raise DomainError(f"validity window 3D <= k < n violated (D={d_ld}, k={k}, n={n})")
    return (3.0 * d_ld / k) ** (k / 2.0)


# ---------------------------------------------------------------------------
# Iteration-count estimates (all clamped to >= 1: a solve costs a step)


def iter_estimate_kappa(kappa2: float, eps: float) -> int:
    """ceil(0.5 sqrt(kappa2) ln(2/eps)) iterations for an eps error reduction."""
    if kappa2 < 1.0:
        raise DomainError("kappa2 >= 1 required")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps in (0, 1) required")
    return max(1, math.ceil(0.5 * math.sqrt(kappa2) * math.log(2.0 / eps)))


def recommended_sigma(ln_k: float, eps: float) -> float:
    """sigma = 2 + ln(1/eps)/ln K, the reportedly sharper choice."""
    if ln_k <= 0.0:
        raise DomainError("ln K must be positive for the recommended sigma")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps in (0, 1) required")
    return 2.0 + math.log(1.0 / eps) / ln_k


def iter_estimate_kaporin(ln_k: float, eps: float, sigma: float = 2.0) -> int:
    """ceil((sigma ln K + 2 ln(1/eps)) / (sigma ln sigma - (sigma-1) ln(sigma-1)))."""
    if ln_k < 0.0:
        raise DomainError("ln K must be nonnegative")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps in (0, 1) required")
    if sigma < 2.0:
        raise DomainError("sigma >= 2 required")
    denom = sigma * math.log(sigma) - (sigma - 1.0) * math.log(sigma - 1.0)
    return max(1, math.ceil((sigma * ln_k + 2.0 * math.log(1.0 / eps)) / denom))


def iter_estimate_divergence(d_ld: float, eps: float) -> int:
    """ceil((ln(1/eps) + D)/ln 2); assumes the caller trace-normalized P."""
    if d_ld < 0.0:
        raise DomainError("divergence must be nonnegative")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps in (0, 1) required")
    return max(1, math.ceil((math.log(1.0 / eps) + d_ld) / math.log(2.0)))
