"""Randomized trace and log-determinant estimation.

Two estimators:

  * hutchinson_trace: plain Hutchinson probing, mean of z' M z over
    sign-vector (or Gaussian) probes.  Unbiased; exact per probe on
    diagonal matrices with sign probes.
  * slq_trace_logdet: stochastic Lanczos quadrature.  Each probe runs m
    Lanczos steps from a unit random vector, eigendecomposes the
    tridiagonal T_m = V Pi V', and accumulates sum_k tau_k^2 f(pi_k)
    with tau the first row of V, for f = identity and f = log.  The
    estimates are n times the probe mean.

Derived quantities: the log-Kaporin surrogate n ln(tr/n) - Gamma, the
complement-scaling estimate (tr - r)/(n - r), and the divergence
surrogate -Gamma + (n - r) ln(alpha).

Determinism: probe i draws from a generator seeded by (seed, i), so a
config reproduces bit-identical estimates regardless of probe batching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotPositiveDefiniteError, RankError
from .linalg import lanczos

__all__ = [
    "ProbeConfig",
    "EstimateReport",
    "hutchinson_trace",
    "slq_trace_logdet",
    "approx_ln_kaporin",
    "approx_alpha",
    "approx_divergence",
]


@dataclass(frozen=True)
class ProbeConfig:
    """Probe schedule: m Lanczos steps for each of n_v start vectors.

    distribution picks the probe law; SLQ normalizes every probe to unit
    2-norm, Hutchinson uses the raw vectors.
    """

    m: int = 30
    n_v: int = 10
    seed: int = 0
    distribution: str = "rademacher"

    def __post_init__(self):
        if self.m < 1 or self.n_v < 1:
            raise DomainError("m >= 1 and n_v >= 1 required")
        if self.distribution not in ("rademacher", "gaussian"):
            raise DomainError(f"unknown distribution {self.distribution!r}")


@dataclass(frozen=True)
class EstimateReport:
    """Estimates plus per-probe quadratic forms.

    per_probe_* store unit-vector-scale contributions, so every aggregate
    is n * mean(per_probe_*).  logdet fields are None for estimators that
    do not produce them.
    """

    n: int
    trace_est: float
    logdet_est: float | None
    per_probe_trace: np.ndarray
    per_probe_logdet: np.ndarray | None
    probes_used: int
    config: ProbeConfig


def _probe_rng(cfg: ProbeConfig, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & (2**64 - 1), index]))


def _draw(rng, n, distribution) -> np.ndarray:
    if distribution == "rademacher":
        return rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    return rng.standard_normal(n)


def hutchinson_trace(apply, n: int, cfg: ProbeConfig) -> EstimateReport:
    """Estimate trace(M) as the mean of z' M z over raw probe vectors."""
    contribs = np.empty(cfg.n_v)
    for i in range(cfg.n_v):
        z = _draw(_probe_rng(cfg, i), n, cfg.distribution)
        contribs[i] = float(z @ apply(z)) / n
    return EstimateReport(
        n=n,
        trace_est=n * float(np.mean(contribs)),
        logdet_est=None,
        per_probe_trace=contribs,
        per_probe_logdet=None,
        probes_used=cfg.n_v,
        config=cfg,
    )


def slq_trace_logdet(apply, n: int, cfg: ProbeConfig) -> EstimateReport:
    """Joint SLQ estimates of trace(M) and log det(M) for SPD M.

    A nonpositive Ritz value aborts with NotPositiveDefiniteError carrying
    the offending probe index.
    """
    tr_contribs = np.empty(cfg.n_v)
    ld_contribs = np.empty(cfg.n_v)
    for i in range(cfg.n_v):
        z = _draw(_probe_rng(cfg, i), n, cfg.distribution)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            raise DomainError("zero probe vector drawn")
        res = lanczos(apply, z / nz, cfg.m)
        T = res.tridiagonal()
        ritz, vecs = np.linalg.eigh(T)
        if np.any(ritz <= 0.0):
            raise NotPositiveDefiniteError(
                f"nonpositive Ritz value on probe {i}: operator is not SPD",
                probe_index=i,
            )
        tau2 = vecs[0, :] ** 2
        tr_contribs[i] = float(tau2 @ ritz)
        ld_contribs[i] = float(tau2 @ np.log(ritz))
    return EstimateReport(
        n=n,
        trace_est=n * float(np.mean(tr_contribs)),
        logdet_est=n * float(np.mean(ld_contribs)),
        per_probe_trace=tr_contribs,
        per_probe_logdet=ld_contribs,
        probes_used=cfg.n_v,
        config=cfg,
    )


def approx_ln_kaporin(trace_est: float, logdet_est: float, n: int) -> float:
    """Plug-in surrogate n ln(tr_hat/n) - Gamma for ln K(M)."""
    if trace_est <= 0.0:
        raise DomainError("trace estimate must be positive")
    return float(n * np.log(trace_est / n) - logdet_est)


def approx_alpha(trace_est_pinv_a: float, n: int, r: int) -> float:
    """Complement scaling estimate (tr_hat(P^-1 A) - r)/(n - r)."""
    if not 0 <= r < n:
        raise RankError("need 0 <= r < n")
    return float((trace_est_pinv_a - r) / (n - r))


def approx_divergence(logdet_est_pinv_a: float, alpha_hat: float, n: int, r: int) -> float:
    """Divergence surrogate -Gamma + (n - r) ln(alpha_hat)."""
    if alpha_hat <= 0.0:
        raise DomainError("alpha_hat must be positive")
    if not 0 <= r < n:
        raise RankError("need 0 <= r < n")
    return float(-logdet_est_pinv_a + (n - r) * np.log(alpha_hat))
