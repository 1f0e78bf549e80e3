"""Matrix Market ingestion, symmetric sparse containers, CSV emission.

The on-disk format is the coordinate Matrix Market exchange format
(`%%MatrixMarket matrix coordinate real symmetric|general`).  Only the
lower triangle is stored internally; the full operator is reconstructed
on the fly by every matvec.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError, SchemaError, SymmetryError

__all__ = [
    "SparseSymMatrix",
    "read_matrix_market",
    "write_matrix_market",
    "write_table",
]


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric real matrix stored as its lower triangle in CSR form.

    Only entries with row >= col are kept; the matvec reflects each
    off-diagonal entry once.  Positive definiteness is not checked here.
    """

    n: int
    lower: sp.csr_matrix = field(repr=False)

    @staticmethod
    def from_coo(n, rows, cols, vals) -> "SparseSymMatrix":
        """Assemble from coordinate triplets (0-based, duplicates summed).

        Entries may address either triangle; each is folded onto the lower
        one.  Duplicate coordinates are summed, Matrix Market style.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise MatrixMarketError(f"coordinate index out of range for order {n}")
        lo_r = np.maximum(rows, cols)
        lo_c = np.minimum(rows, cols)
        lower = sp.coo_matrix((vals, (lo_r, lo_c)), shape=(n, n)).tocsr()
        lower.sum_duplicates()
        lower.eliminate_zeros()
        return SparseSymMatrix(n=n, lower=lower)

    @staticmethod
    def from_dense(a, tol=1e-12) -> "SparseSymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("square matrix required")
        scale = max(np.abs(a).max(), 1.0)
        if np.abs(a - a.T).max() > tol * scale:
            raise SymmetryError("dense input is not symmetric")
        lower = sp.csr_matrix(np.tril(a))
        return SparseSymMatrix(n=a.shape[0], lower=lower)

    @property
    def nnz_lower(self) -> int:
        return int(self.lower.nnz)

    def diagonal(self) -> np.ndarray:
        return self.lower.diagonal()

    def matvec(self, x) -> np.ndarray:
        """Full symmetric product A @ x from the stored triangle."""
        x = np.asarray(x, dtype=np.float64)
        return self.lower @ x + self.lower.T @ x - self.diagonal() * x

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        lo = self.lower.toarray()
        return lo + lo.T - np.diag(self.lower.diagonal())

    def coo_entries(self):
        """Lower-triangle triplets (row, col, value), row-major sorted."""
        coo = self.lower.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


def _parse_banner(line: str):
    parts = line.strip().split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket":
        raise MatrixMarketError(f"bad banner line: {line.strip()!r}")
    _, obj, fmt, fieldkind, symmetry = (p.lower() for p in parts)
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported object/format: {obj} {fmt}")
    if fieldkind != "real":
        raise MatrixMarketError(f"unsupported field type: {fieldkind}")
    if symmetry not in ("symmetric", "general"):
        raise MatrixMarketError(f"unsupported symmetry: {symmetry}")
    return symmetry


def read_matrix_market(path) -> SparseSymMatrix:
    """Read a real coordinate Matrix Market file as a symmetric matrix.

    `symmetric` files are taken as-is (lower triangle).  `general` files
    must be square and symmetric to 1e-12 relative; the lower triangle of
    the symmetrized matrix is kept.
    """
    with open(path, "r", encoding="ascii") as fh:
        return _read_mm_stream(fh)


def _read_mm_stream(fh) -> SparseSymMatrix:
    banner = fh.readline()
    if not banner:
        raise MatrixMarketError("empty file")
    symmetry = _parse_banner(banner)

    size_line = None
    for line in fh:
        if line.startswith("%") or not line.strip():
            continue
        size_line = line
        break
    if size_line is None:
        raise MatrixMarketError("missing size line")
    parts = size_line.split()
    if len(parts) != 3:
        raise MatrixMarketError(f"bad size line: {size_line.strip()!r}")
    try:
        n, m, nnz = (int(p) for p in parts)
    except ValueError as exc:
        raise MatrixMarketError(f"bad size line: {size_line.strip()!r}") from exc
    if n != m:
        raise MatrixMarketError(f"matrix must be square, got {n}x{m}")
    if n <= 0 or nnz < 0:
        raise MatrixMarketError(f"bad dimensions in size line: {size_line.strip()!r}")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    k = 0
    for line in fh:
        if not line.strip() or line.startswith("%"):
            continue
        if k >= nnz:
            raise MatrixMarketError("more entries than declared")
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"bad entry line: {line.strip()!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise MatrixMarketError(f"bad entry line: {line.strip()!r}") from exc
        if not (1 <= i <= n and 1 <= j <= n):
            raise MatrixMarketError(f"entry index ({i},{j}) out of range for order {n}")
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {k}")

    if symmetry == "symmetric":
        if np.any(cols > rows):
            raise MatrixMarketError("symmetric file stores an upper-triangle entry")
        return SparseSymMatrix.from_coo(n, rows, cols, vals)

    # general: assemble fully and verify symmetry before folding
    full = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    full.sum_duplicates()
    gap = abs(full - full.T)
    scale = max(abs(full).max(), 1.0) if full.nnz else 1.0
    if gap.nnz and gap.max() > 1e-12 * scale:
        raise SymmetryError("general file is not symmetric to 1e-12 relative")
    folded = sp.tril(0.5 * (full + full.T)).tocoo()
    return SparseSymMatrix.from_coo(n, folded.row, folded.col, folded.data)


def write_matrix_market(mat: SparseSymMatrix, path) -> None:
    """Emit the lower triangle as `matrix coordinate real symmetric`."""
    rows, cols, vals = mat.coo_entries()
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real symmetric\n")
    buf.write(f"{mat.n} {mat.n} {len(vals)}\n")
    for i, j, v in zip(rows, cols, vals):
        buf.write(f"{i + 1} {j + 1} {v:.17g}\n")
    _atomic_write(path, buf.getvalue())


def write_table(rows, path, columns=None) -> None:
    """Write named real tuples as CSV with 17 significant digits.

    `rows` is a sequence of mappings sharing one column set; the header
    order is that of the first row unless `columns` pins it.  An empty
    sequence with `columns` given produces a header-only file.
    """
    rows = list(rows)
    if columns is None:
        if not rows:
            raise SchemaError("no rows and no explicit columns: schema unknown")
        columns = list(rows[0].keys())
    columns = list(columns)
    colset = set(columns)
    lines = [",".join(columns)]
    for k, row in enumerate(rows):
        if set(row.keys()) != colset:
            raise SchemaError(f"row {k} columns {sorted(row.keys())} != {sorted(colset)}")
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _atomic_write(path, text) -> None:
    path = os.fspath(path)
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc
