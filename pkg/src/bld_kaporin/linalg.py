"""Dense symmetric eigendecomposition, Cholesky / IC(0) factorizations,
triangular solves, and Lanczos tridiagonalization.

Dense kernels are delegated to LAPACK through numpy/scipy (the eigensolver
is the standard Householder reduction plus implicitly shifted QL/QR that
``eigh`` wraps); the zero-fill incomplete Cholesky and the Lanczos
recurrence are implemented here because their contracts (pattern equality,
shift reporting, breakdown flags) are part of this package's surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    ConvergenceError,
    FactorizationError,
    NotPositiveDefiniteError,
    SingularFactorError,
)
from .matio import SparseSymMatrix

__all__ = [
    "LowerTriFactor",
    "EigenDecomposition",
    "LanczosResult",
    "cholesky",
    "ic0",
    "identity_factor",
    "sym_eig",
    "tri_solve",
    "lanczos",
]

# Dense solve cache is only built below this order; above it the sparse
# triangular solve is used as-is.
_DENSE_CACHE_LIMIT = 2000


@dataclass
class LowerTriFactor:
    """Lower-triangular factor Q with QQ^T approximating (or equal to) A.

    kind is one of {"exact-cholesky", "ic0", "identity"}; shift records the
    relative diagonal boost that was needed to complete an ic0 run (0 when
    none was).
    """

    n: int
    kind: str
    shift: float = 0.0
    dense_values: np.ndarray | None = field(default=None, repr=False)
    sparse_values: sp.csr_matrix | None = field(default=None, repr=False)
    _dense_cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        diag = self.diagonal()
        if np.any(diag <= 0):
            raise SingularFactorError("factor has a nonpositive diagonal entry")

    def diagonal(self) -> np.ndarray:
        if self.dense_values is not None:
            return np.diag(self.dense_values).copy()
        return self.sparse_values.diagonal()

    @property
    def nnz(self) -> int:
        if self.sparse_values is not None:
            return int(self.sparse_values.nnz)
        return int(np.count_nonzero(self.dense_values))

    def to_dense(self) -> np.ndarray:
        if self.dense_values is not None:
            return self.dense_values
        if self._dense_cache is None and self.n <= _DENSE_CACHE_LIMIT:
            self._dense_cache = self.sparse_values.toarray()
        return self._dense_cache if self._dense_cache is not None else self.sparse_values.toarray()

    def solve(self, b, mode="forward"):
        return tri_solve(self, b, mode)

    def matvec(self, x, mode="forward") -> np.ndarray:
        """Apply Q (mode forward) or Q^T (mode adjoint)."""
        L = self.sparse_values if self.sparse_values is not None else self.dense_values
        return (L @ x) if mode == "forward" else (L.T @ x)

    def logdet_gram(self) -> float:
        """log det(QQ^T) = 2 sum(log diag Q)."""
        return 2.0 * float(np.sum(np.log(self.diagonal())))


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral factorization S = W diag(values) W^T.

    values are sorted algebraically non-increasing; the columns of
    vectors are the matching orthonormal eigenvectors.
    """

    n: int
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class LanczosResult:
    """Tridiagonal reduction after m steps.

    alphas has length m, betas length m-1 (strictly positive up to any
    breakdown).  basis, when retained, has the m Lanczos vectors as
    columns.  breakdown is True when the recurrence exhausted the Krylov
    space before the requested step count.
    """

    m: int
    alphas: np.ndarray
    betas: np.ndarray
    basis: np.ndarray | None
    breakdown: bool

    def tridiagonal(self) -> np.ndarray:
        T = np.diag(self.alphas)
        if self.m > 1:
            T += np.diag(self.betas, 1) + np.diag(self.betas, -1)
        return T


def _as_dense_sym(A) -> np.ndarray:
    if isinstance(A, SparseSymMatrix):
        return A.to_dense()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    return A


def cholesky(A) -> LowerTriFactor:
    """Exact dense Cholesky factor of an SPD matrix.

    Raises NotPositiveDefiniteError on a nonpositive pivot.
    """
    Ad = _as_dense_sym(A)
    scale = max(np.abs(Ad).max(), 1.0)
    if np.abs(Ad - Ad.T).max() > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(0.5 * (Ad + Ad.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"cholesky failed: {exc}") from exc
    return LowerTriFactor(n=Ad.shape[0], kind="exact-cholesky", dense_values=L)


def identity_factor(n: int) -> LowerTriFactor:
    """Factor of the identity; P = QQ^T = I."""
    return LowerTriFactor(n=n, kind="identity", dense_values=np.eye(n))


def ic0(A: SparseSymMatrix, beta0=1e-3, beta_max=1.0) -> LowerTriFactor:
    """Zero-fill incomplete Cholesky on the lower-triangle pattern of A.

    On pivot breakdown the factorization restarts on A + beta*diag(A)
    with beta doubling from `beta0`; the shift that succeeded is recorded
    on the factor.  Persisting past `beta_max` raises FactorizationError.
    """
    if not isinstance(A, SparseSymMatrix):
        A = SparseSymMatrix.from_dense(A)
    if np.any(A.diagonal() <= 0):
        raise NotPositiveDefiniteError("ic0 requires a strictly positive diagonal")
    beta = 0.0
    while True:
        L = _ic0_attempt(A, beta)
        if L is not None:
            return LowerTriFactor(n=A.n, kind="ic0", shift=beta, sparse_values=L)
        beta = beta0 if beta == 0.0 else 2.0 * beta
        if beta > beta_max:
            raise FactorizationError(f"ic0 breakdown persists past shift {beta_max}")


def _ic0_attempt(A: SparseSymMatrix, beta: float):
    """One IC(0) pass; returns the CSR factor or None on breakdown."""
    n = A.n
    lower = A.lower.tocsr()
    indptr, indices, data = lower.indptr, lower.indices, lower.data
    # row i of the factor shares the pattern {j : A[i,j] != 0, j <= i}
    cols = [indices[indptr[i]:indptr[i + 1]] for i in range(n)]
    vals = [data[indptr[i]:indptr[i + 1]].astype(np.float64).copy() for i in range(n)]

    for i in range(n):
        ci, vi = cols[i], vals[i]
        if len(ci) == 0 or ci[-1] != i:
            return None  # structurally missing diagonal: unrecoverable by shift
        for t in range(len(ci)):
            j = ci[t]
            # vi[t] still holds the A entry here; positions < t hold L entries
            s = vi[t] * (1.0 + beta) if j == i else vi[t]
            cj, vj = cols[j], vals[j]
            # merge the sorted patterns of rows i and j up to column j
            a = b = 0
            acc = 0.0
            while a < t and b < len(cj) - 1:
                ka, kb = ci[a], cj[b]
                if ka == kb:
                    acc += vi[a] * vj[b]
                    a += 1
                    b += 1
                elif ka < kb:
                    a += 1
                else:
                    b += 1
            s -= acc
            if j < i:
                vi[t] = s / vals[j][-1]
            else:
                if s <= 0.0:
                    return None
                vi[t] = np.sqrt(s)
    return sp.csr_matrix(
        (np.concatenate(vals), np.concatenate(cols),
         np.concatenate(([0], np.cumsum([len(c) for c in cols])))),
        shape=(n, n),
    )


def sym_eig(S) -> EigenDecomposition:
    """Eigendecomposition of a symmetric dense matrix.

    Eigenvalues come back sorted algebraically non-increasing with
    matching orthonormal eigenvector columns.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("square matrix required")
    scale = max(np.abs(S).max(), 1.0)
    if np.abs(S - S.T).max() > 1e-10 * scale:
        raise ValueError("matrix is not symmetric to 1e-10 relative")
    try:
        w, V = np.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(w)[::-1]
    return EigenDecomposition(n=S.shape[0], values=w[order], vectors=V[:, order])


def tri_solve(L: LowerTriFactor, b, mode="forward"):
    """Solve Lx = b (forward) or L^T x = b (adjoint).

    Accepts a vector or a matrix right-hand side.
    """
    if mode not in ("forward", "adjoint"):
        raise ValueError(f"unknown mode {mode!r}")
    b = np.asarray(b, dtype=np.float64)
    diag = L.diagonal()
    if np.any(diag == 0.0):
        raise SingularFactorError("zero diagonal in triangular solve")
    if L.dense_values is not None or L.n <= _DENSE_CACHE_LIMIT:
        Ld = L.to_dense()
        return sla.solve_triangular(Ld, b, lower=True, trans="N" if mode == "forward" else "T")
    Ls = L.sparse_values
    from scipy.sparse.linalg import spsolve_triangular

    if mode == "forward":
        return spsolve_triangular(Ls, b, lower=True)
    return spsolve_triangular(Ls.T.tocsr(), b, lower=False)


def lanczos(apply, v0, m, reorthogonalize=True) -> LanczosResult:
    """Symmetric Lanczos tridiagonalization from a unit starting vector.

    `apply` must implement a symmetric operator on n-vectors.  Full
    reorthogonalization is the default.  beta falling below
    1e-12 * (running norm estimate) truncates the run and sets the
    breakdown flag.
    """
    v = np.asarray(v0, dtype=np.float64).copy()
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError("starting vector must have unit 2-norm")
    n = v.shape[0]
    m = int(m)
    if m < 1:
        raise ValueError("m >= 1 required")
    m = min(m, n)

    basis = np.zeros((n, m))
    alphas = np.zeros(m)
    betas = np.zeros(max(m - 1, 0))
    basis[:, 0] = v
    v_prev = np.zeros(n)
    beta_prev = 0.0
    norm_est = 0.0
    k_done = 0
    breakdown = False

    for k in range(m):
        w = np.asarray(apply(basis[:, k]), dtype=np.float64)
        alpha = float(basis[:, k] @ w)
        w = w - alpha * basis[:, k] - beta_prev * v_prev
        if reorthogonalize:
            # two classical Gram-Schmidt sweeps against the kept basis
            for _ in range(2):
                w -= basis[:, : k + 1] @ (basis[:, : k + 1].T @ w)
        alphas[k] = alpha
        norm_est = max(norm_est, abs(alpha) + beta_prev)
        k_done = k + 1
        if k == m - 1:
            break
        beta = float(np.linalg.norm(w))
        norm_est = max(norm_est, beta)
        if beta <= 1e-12 * max(norm_est, 1e-300):
            breakdown = True
            break
        betas[k] = beta
        v_prev = basis[:, k]
        basis[:, k + 1] = w / beta
        beta_prev = beta

    return LanczosResult(
        m=k_done,
        alphas=alphas[:k_done].copy(),
        betas=betas[: max(k_done - 1, 0)].copy(),
        basis=basis[:, :k_done].copy(),
        breakdown=breakdown,
    )
