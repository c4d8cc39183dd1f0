"""Symmetric sparse assembly and a reusable sparse LDL^T factorization.

The factorization is backed by QDLDL (AMD ordering + sparse LDL^T).  A
factor is computed once and then reused for any number of right-hand
sides; a positive-definiteness check is made on the pivots.
"""

from __future__ import annotations

import threading

import numpy as np
import qdldl
import scipy.io
import scipy.sparse as sp

from .errors import (
    AsymmetricInputError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    NotPositiveDefiniteError,
)

SYMMETRY_TOL = 1e-12


class SparseSymMatrix:
    """Symmetric sparse matrix stored as a full CSC pattern.

    Symmetry holds exactly by construction: the stored matrix is
    ``T + T^T - diag(T)`` for a triangular part ``T``.
    """

    __slots__ = ("csc",)

    def __init__(self, matrix):
        m = sp.csc_matrix(matrix, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"matrix must be square, got {m.shape}")
        lower = sp.tril(m, format="csc")
        full = (lower + sp.tril(m, -1, format="csc").T).tocsc()
        full.eliminate_zeros()
        full.sort_indices()
        self.csc = full

    @property
    def n(self) -> int:
        return self.csc.shape[0]

    @property
    def shape(self):
        return self.csc.shape

    def __matmul__(self, other):
        return self.csc @ other

    def __add__(self, other):
        other = other.csc if isinstance(other, SparseSymMatrix) else other
        return SparseSymMatrix(self.csc + other)

    def __mul__(self, scalar: float):
        return SparseSymMatrix(self.csc * float(scalar))

    __rmul__ = __mul__

    def toarray(self) -> np.ndarray:
        return self.csc.toarray()

    def diagonal(self) -> np.ndarray:
        return self.csc.diagonal()

    def submatrix(self, keep) -> SparseSymMatrix:
        """Principal submatrix on the index set ``keep``."""
        return SparseSymMatrix(self.csc[keep][:, keep])

    def __repr__(self):
        return f"SparseSymMatrix(n={self.n}, nnz={self.csc.nnz})"


def assemble(n: int, rows, cols, values, lower_only: bool = False) -> SparseSymMatrix:
    """Build an ``n x n`` symmetric matrix from COO triplets, summing duplicates.

    With ``lower_only`` each off-diagonal triplet stands for itself and its
    mirror. Otherwise the triplets must already describe a symmetric matrix.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=np.float64).ravel()
    if not (len(rows) == len(cols) == len(values)):
        raise DimensionMismatchError("rows, cols and values must have equal length")
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexOutOfRangeError(f"triplet index outside [0, {n})")
    if lower_only:
        off = rows != cols
        r = np.concatenate([rows, cols[off]])
        c = np.concatenate([cols, rows[off]])
        v = np.concatenate([values, values[off]])
        return SparseSymMatrix(sp.coo_matrix((v, (r, c)), shape=(n, n)))
    m = sp.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsc()
    diff = abs(m - m.T)
    if diff.nnz and diff.max() > SYMMETRY_TOL * max(1.0, abs(m).max()):
        raise AsymmetricInputError(f"triplets are not symmetric (max mismatch {diff.max():.3g})")
    return SparseSymMatrix(m)


def assemble_triplets(n: int, triplets, lower_only: bool = False) -> SparseSymMatrix:
    """Convenience wrapper taking an iterable of ``(i, j, value)``."""
    trip = list(triplets)
    if not trip:
        return SparseSymMatrix(sp.csc_matrix((n, n)))
    r, c, v = zip(*trip)
    return assemble(n, r, c, v, lower_only=lower_only)


class CholeskyFactor:
    """Sparse LDL^T factor of an SPD matrix with a fill-reducing permutation."""

    def __init__(self, matrix: SparseSymMatrix):
        self.n = matrix.n
        self.matrix = matrix
        upper = sp.triu(matrix.csc, format="csc")
        try:
            self._solver = qdldl.Solver(upper, upper=True)
        except RuntimeError as exc:  # zero pivot
            raise NotPositiveDefiniteError(f"factorization failed: {exc}") from None
        _, d, perm = self._solver.factors()
        if d.size and not np.all(d > 0):
            i = int(np.argmin(d))
            raise NotPositiveDefiniteError(f"pivot {i} is {d[i]:.3g}; matrix is not positive definite")
        self.pivots = d
        self.permutation = perm
        self._lock = threading.Lock()

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise DimensionMismatchError(f"rhs has length {b.shape[0]}, factor has dimension {self.n}")
        if b.ndim == 2:
            return np.column_stack([self.solve(col) for col in b.T])
        with self._lock:
            return np.array(self._solver.solve(np.ascontiguousarray(b)))

    def __repr__(self):
        return f"CholeskyFactor(n={self.n})"


def factorize(matrix: SparseSymMatrix) -> CholeskyFactor:
    return CholeskyFactor(matrix)


def solve(factor: CholeskyFactor, b) -> np.ndarray:
    return factor.solve(b)


def write_matrix_market(matrix, path):
    """Dump a matrix in MatrixMarket coordinate format (symmetric when possible)."""
    if isinstance(matrix, SparseSymMatrix):
        scipy.io.mmwrite(str(path), matrix.csc, symmetry="symmetric")
    else:
        scipy.io.mmwrite(str(path), sp.coo_matrix(matrix))
