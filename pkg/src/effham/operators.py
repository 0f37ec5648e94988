"""Storage-agnostic complex Hermitian operators.

A :class:`HermitianOperator` wraps either a dense ``numpy`` array or a
``scipy.sparse`` CSR matrix and exposes the two access patterns the
diagonalization and time-evolution code need: the diagonal (energies) and
the off-diagonal entries (couplings).

Conventions
-----------
A coupling between basis states ``row < col`` is stored as the
lower-triangle entry ``H[col, row] = magnitude * exp(1j * phase)``; the
upper-triangle entry is its conjugate. Sparse storage is compressed-row
with sorted column indices; construction canonicalizes (duplicates summed,
exact zeros dropped).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.io import mmread, mmwrite

from .errors import HermiticityViolation

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class Coupling:
    """One off-diagonal matrix element, indexed by its upper-triangle position."""

    row: int
    col: int
    magnitude: float
    phase: float


class HermitianOperator:
    """Complex Hermitian matrix with a dense or sparse (CSR) backing store.

    Immutable after construction: all operations return new operators.
    ``validate=False`` skips the Hermiticity scan for matrices known good by
    construction (the scan is O(nnz) and is dead weight in timing loops).
    """

    def __init__(self, matrix, *, validate: bool = True):
        if sps.issparse(matrix):
            m = sps.csr_matrix(matrix, dtype=np.complex128, copy=True)
            m.sum_duplicates()
            m.eliminate_zeros()
            m.sort_indices()
            self._m = m
            self.layout = "sparse"
        else:
            m = np.array(matrix, dtype=np.complex128, copy=True)
            if m.ndim != 2:
                raise ValueError("expected a 2-d matrix")
            self._m = m
            self.layout = "dense"
        if self._m.shape[0] != self._m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {self._m.shape}")
        self.dim = int(self._m.shape[0])
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        self._max_abs: float | None = None
        if validate:
            self._check_hermitian()

    # -- basic accessors ----------------------------------------------------

    @property
    def data(self):
        """The backing ndarray or CSR matrix. Treat as read-only."""
        return self._m

    @property
    def nnz(self) -> int:
        if self.layout == "sparse":
            return int(self._m.nnz)
        return int(np.count_nonzero(self._m))

    def to_dense(self) -> np.ndarray:
        if self.layout == "sparse":
            return self._m.toarray()
        return self._m.copy()

    def copy(self) -> "HermitianOperator":
        return HermitianOperator(self._m, validate=False)

    def max_abs(self) -> float:
        """Largest entry magnitude, max_ij |H_ij| (cached)."""
        if self._max_abs is None:
            if self.layout == "sparse":
                self._max_abs = float(np.max(np.abs(self._m.data))) if self._m.nnz else 0.0
            else:
                self._max_abs = float(np.max(np.abs(self._m))) if self.dim else 0.0
        return self._max_abs

    def entry(self, i: int, j: int) -> complex:
        return complex(self._m[i, j])

    def _check_hermitian(self) -> None:
        scale = self.max_abs()
        if scale == 0.0:
            return
        if self.layout == "sparse":
            diff = self._m - self._m.conjugate().T
            worst = float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
        else:
            worst = float(np.max(np.abs(self._m - self._m.conjugate().T)))
        if worst > HERMITICITY_RTOL * scale:
            raise HermiticityViolation(
                f"max |H - H^dag| = {worst:.3e} exceeds {HERMITICITY_RTOL:.0e} * {scale:.3e}"
            )

    # -- diagonal / coupling views -------------------------------------------

    def diagonal(self) -> np.ndarray:
        """Real parts of the diagonal entries.

        Raises HermiticityViolation if any diagonal imaginary part exceeds
        the Hermiticity tolerance (relative to the largest entry magnitude).
        """
        d = np.asarray(self._m.diagonal())
        tol = HERMITICITY_RTOL * max(self.max_abs(), 1.0)
        worst = float(np.max(np.abs(d.imag))) if d.size else 0.0
        if worst > tol:
            raise HermiticityViolation(f"diagonal imaginary part {worst:.3e} exceeds {tol:.3e}")
        return d.real.copy()

    def _lower_triangle(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Strict lower-triangle nonzeros as (rows, cols, values), unordered."""
        if self.layout == "sparse":
            low = sps.tril(self._m, k=-1, format="coo")
            return low.row, low.col, low.data
        rows, cols = np.nonzero(np.tril(self._m, k=-1))
        return rows, cols, self._m[rows, cols]

    def couplings(self) -> list[Coupling]:
        """All nonzero couplings, ordered row-major by (row, col) of the upper triangle."""
        r, c, v = self._lower_triangle()
        keep = v != 0
        r, c, v = r[keep], c[keep], v[keep]
        # coupling indices are (col, row) of the lower-triangle entry
        order = np.lexsort((r, c))
        return [
            Coupling(int(c[k]), int(r[k]), float(abs(v[k])), float(np.angle(v[k])))
            for k in order
        ]

    def largest_couplings(self, k: int) -> list[Coupling]:
        """The k couplings of greatest magnitude, descending.

        Ties break by (row, col) lexicographic order; returns fewer than k
        when fewer couplings exist.
        """
        if k < 1:
            raise ValueError("k must be at least 1")
        r, c, v = self._lower_triangle()
        keep = v != 0
        r, c, v = r[keep], c[keep], v[keep]
        mags = np.abs(v)
        order = np.lexsort((r, c, -mags))[:k]
        return [
            Coupling(int(c[i]), int(r[i]), float(mags[i]), float(np.angle(v[i])))
            for i in order
        ]


def load_matrix_market(path) -> HermitianOperator:
    """Read an operator from a Matrix Market file (hermitian symmetry honored)."""
    m = mmread(path)
    return HermitianOperator(m)


def save_matrix_market(op: HermitianOperator, path) -> None:
    """Write an operator in Matrix Market format, recording the hermitian symmetry."""
    mmwrite(path, op.data, symmetry="hermitian")
