"""Sparse linear systems with cached direct factorizations."""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DEFAULT_TOL = 1e-10

# process-wide counters reported in run manifests
STATS = {"factorizations": 0, "factorization_seconds": 0.0, "solves": 0, "solve_seconds": 0.0}


def reset_stats():
    for k in STATS:
        STATS[k] = type(STATS[k])(0)


def stats():
    return dict(STATS)


class Factorization:
    """SuperLU factors whose triangular solves are timed into :data:`STATS`."""

    def __init__(self, lu):
        self._lu = lu

    def __getattr__(self, name):
        return getattr(self._lu, name)

    def solve(self, b):
        t0 = time.perf_counter()
        x = self._lu.solve(np.asarray(b, dtype=float))
        STATS["solves"] += 1
        STATS["solve_seconds"] += time.perf_counter() - t0
        return x


class LinearSolveError(RuntimeError):
    pass


class SingularMatrixError(LinearSolveError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class LinearSystem:
    """Additively assembled sparse system ``A x = b``.

    Entries are accumulated with :meth:`add` and merged by :meth:`finalize`;
    after that the matrix is frozen and its factorization can be reused for
    any number of right-hand sides.
    """

    def __init__(self, n, rhs=None):
        self.n = int(n)
        self._rows = []
        self._cols = []
        self._vals = []
        self.rhs = np.zeros(self.n) if rhs is None else np.asarray(rhs, dtype=float).copy()
        if self.rhs.shape != (self.n,):
            raise ValueError(f"rhs length {self.rhs.shape} does not match dimension {self.n}")
        self.matrix = None
        self._lu = None

    @classmethod
    def from_matrix(cls, matrix, rhs=None):
        matrix = sp.csc_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"matrix must be square, got {matrix.shape}")
        system = cls(matrix.shape[0], rhs)
        matrix.sum_duplicates()
        system.matrix = matrix
        return system

    @property
    def finalized(self) -> bool:
        return self.matrix is not None

    def add(self, rows, cols, vals):
        if self.finalized:
            raise RuntimeError("system is finalized")
        rows, cols, vals = np.broadcast_arrays(
            np.asarray(rows, dtype=int), np.asarray(cols, dtype=int), np.asarray(vals, dtype=float)
        )
        self._rows.append(rows.ravel())
        self._cols.append(cols.ravel())
        self._vals.append(vals.ravel())

    def finalize(self):
        if self.finalized:
            return self
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        self.matrix = sp.csc_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        self.matrix.sum_duplicates()
        self._rows = self._cols = self._vals = None
        return self

    def factorize(self):
        """Compute (once) and return the LU factorization."""
        if self._lu is None:
            self.finalize()
            self._lu = factorize(self.matrix)
        return self._lu

    @property
    def factorization(self):
        return self._lu


def factorize(matrix):
    """Sparse LU factors of ``matrix``; raises :class:`SingularMatrixError` on a (near) zero pivot."""
    t0 = time.perf_counter()
    matrix = sp.csc_matrix(matrix)
    try:
        lu = spla.splu(matrix)
    except RuntimeError as exc:
        pivot = _find_zero_pivot(matrix)
        raise SingularMatrixError(
            f"matrix is exactly singular (zero pivot at row/column {pivot})", pivot
        ) from exc
    diag = np.abs(lu.U.diagonal())
    scale = max(float(np.max(np.abs(matrix.data))) if matrix.nnz else 0.0, 1e-300)
    k = int(np.argmin(diag))
    if diag[k] <= 1e-14 * scale:
        col = int(lu.perm_c[k])
        raise SingularMatrixError(
            f"matrix is numerically singular (pivot {diag[k]:.3e} at column {col})", col
        )
    STATS["factorizations"] += 1
    STATS["factorization_seconds"] += time.perf_counter() - t0
    return Factorization(lu)


def _find_zero_pivot(matrix):
    """Best-effort location of the singular row/column for error messages."""
    csr = matrix.tocsr()
    empty_rows = np.flatnonzero(np.diff(csr.indptr) == 0)
    if empty_rows.size:
        return int(empty_rows[0])
    csc = matrix.tocsc()
    empty_cols = np.flatnonzero(np.diff(csc.indptr) == 0)
    if empty_cols.size:
        return int(empty_cols[0])
    # perturb the diagonal so SuperLU completes, then report the smallest pivot
    eps = 1e-12 * float(np.max(np.abs(matrix.data)))
    lu = spla.splu(sp.csc_matrix(matrix + eps * sp.identity(matrix.shape[0])))
    k = int(np.argmin(np.abs(lu.U.diagonal())))
    return int(lu.perm_c[k])


def solve(system: LinearSystem, reuse_factorization=True, rhs=None, tol=DEFAULT_TOL):
    """Solve ``system`` for its rhs (or for ``rhs`` if given).

    With ``reuse_factorization`` the LU factors are computed on first use and
    cached on the system; otherwise a fresh factorization is computed and
    discarded.  The scaled residual ``|Ax - b|_inf / max(1, |b|_inf)`` is
    checked against ``tol`` after one step of iterative refinement.
    """
    system.finalize()
    b = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    if b.shape[0] != system.n:
        raise ValueError(f"rhs length {b.shape[0]} does not match dimension {system.n}")
    lu = system.factorize() if reuse_factorization else factorize(system.matrix)
    x = lu.solve(b)
    r = b - system.matrix @ x
    bnorm = max(1.0, float(np.max(np.abs(b)))) if b.size else 1.0
    if np.max(np.abs(r)) > tol * bnorm:
        x = x + lu.solve(r)
        r = b - system.matrix @ x
        if np.max(np.abs(r)) > tol * bnorm:
            raise LinearSolveError(
                f"scaled residual {np.max(np.abs(r)) / bnorm:.3e} exceeds tolerance {tol:.1e}"
            )
    return x


def five_point_matrix(a_c, a_w, a_e, a_s, a_n):
    """CSC matrix of a five-point stencil on an ``(nx, ny)`` block.

    Coefficients are ``(nx, ny)`` arrays; ``a_w[0]``, ``a_e[-1]``, ``a_s[:, 0]``
    and ``a_n[:, -1]`` are ignored (no neighbor there).
    """
    nx, ny = a_c.shape
    n = nx * ny
    a_n = np.array(a_n, dtype=float)
    a_s = np.array(a_s, dtype=float)
    a_n[:, -1] = 0.0
    a_s[:, 0] = 0.0
    diagonals = [a_c.ravel()]
    offsets = [0]
    if nx > 1:
        diagonals += [np.asarray(a_e, dtype=float).ravel()[: n - ny], np.asarray(a_w, dtype=float).ravel()[ny:]]
        offsets += [ny, -ny]
    if ny > 1:
        diagonals += [a_n.ravel()[: n - 1], a_s.ravel()[1:]]
        offsets += [1, -1]
    return sp.diags(diagonals, offsets, shape=(n, n), format="csc")
