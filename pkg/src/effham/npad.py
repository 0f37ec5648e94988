"""Iterative exact block-diagonalization with Givens rotations.

Each step targets one coupling ``H[j, i] = g * exp(1j*phi)`` between basis
states ``i < j`` with half energy gap ``delta = (H[i,i] - H[j,j]) / 2`` and
conjugates the operator by the two-level unitary that zeroes that coupling
exactly. All rotation parameters come from algebraic identities on
``(delta, g, phi)``; no inverse trigonometric function is evaluated:

    r     = hypot(delta, g)
    cos(t) = |delta| / r,  sin(t) = sign(delta) * g / r
    cos(t/2) = sqrt((1 + cos(t)) / 2),  sin(t/2) = sin(t) / (2 cos(t/2))

The sign fold keeps ``cos(t) >= 0`` so the half-angle square root never
cancels, and makes the rotation preserve the ordering of the two diagonal
entries whenever ``delta != 0``. Iterating on the largest remaining
coupling drives the operator toward (block-)diagonal form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sps

from .errors import IndexOutOfRange, OverlappingPairs, UnitarityDrift, ZeroCoupling
from .operators import HermitianOperator

# New entries smaller than this fraction of max|H| are dropped during sparse
# row updates, bounding fill-in across many rotations.
SPARSE_FILL_DROP = 1e-15

# Accumulated-unitary drift is audited every this many rotations.
UNITARY_CHECK_EVERY = 100
UNITARY_DRIFT_TOL = 1e-10


@dataclass(frozen=True)
class GivensRotation:
    """Two-level unitary acting on span{|i>, |j>}, i < j.

    The embedded 2x2 block is ``[[c, s*e^{-i*phase}], [-s*e^{i*phase}, c]]``
    with ``c = cos_half`` and ``s = sin_half`` (signed).
    """

    i: int
    j: int
    cos_half: float
    sin_half: float
    phase: float
    degenerate: bool = False

    def __post_init__(self):
        if not (0 <= self.i < self.j):
            raise IndexOutOfRange(f"need 0 <= i < j, got ({self.i}, {self.j})")
        residual = abs(self.cos_half**2 + self.sin_half**2 - 1.0)
        if residual > 1e-14:
            raise ValueError(f"rotation parameters not normalized: |c^2+s^2-1| = {residual:.2e}")

    def embedded(self) -> np.ndarray:
        """The 2x2 unitary block."""
        c = self.cos_half
        se = self.sin_half * np.exp(1j * self.phase)
        return np.array([[c, np.conj(se)], [-se, c]], dtype=np.complex128)

    def as_matrix(self, dim: int) -> np.ndarray:
        """Dense embedding into the full space (identity elsewhere)."""
        if self.j >= dim:
            raise IndexOutOfRange(f"rotation indices ({self.i}, {self.j}) exceed dim {dim}")
        u = np.eye(dim, dtype=np.complex128)
        block = self.embedded()
        u[self.i, self.i] = block[0, 0]
        u[self.i, self.j] = block[0, 1]
        u[self.j, self.i] = block[1, 0]
        u[self.j, self.j] = block[1, 1]
        return u


@dataclass
class NPADState:
    """Operator under iteration plus rotation bookkeeping.

    ``accumulated_unitary`` is tracked only when requested; it satisfies
    ``current = U @ initial @ U^dag`` and is audited for unitarity drift
    every ``UNITARY_CHECK_EVERY`` rotations.
    """

    current: HermitianOperator
    applied: int = 0
    accumulated_unitary: np.ndarray | None = None
    converged: bool = True

    @classmethod
    def from_operator(cls, op: HermitianOperator, *, track_unitary: bool = False) -> "NPADState":
        u = np.eye(op.dim, dtype=np.complex128) if track_unitary else None
        return cls(current=op, accumulated_unitary=u)


def givens_rotation_matrix(op: HermitianOperator, i: int, j: int) -> GivensRotation:
    """Rotation that zeroes the (i, j) coupling of ``op`` under conjugation.

    Raises ZeroCoupling when the coupling is exactly zero (the rotation
    would be the identity; skip the pair instead). A degenerate diagonal
    pair (delta == 0) is flagged, not fatal: the quarter-turn branch is
    used and ordering preservation is vacuous.
    """
    if not (0 <= i < j < op.dim):
        raise IndexOutOfRange(f"need 0 <= i < j < {op.dim}, got ({i}, {j})")
    v = op.entry(j, i)
    if v == 0:
        raise ZeroCoupling(f"entry ({j}, {i}) is zero; nothing to eliminate")
    g = abs(v)
    phi = float(np.angle(v))
    delta = (op.entry(i, i).real - op.entry(j, j).real) / 2.0
    r = math.hypot(delta, g)
    sgn = 1.0 if delta >= 0.0 else -1.0
    cos_t = abs(delta) / r
    sin_t = sgn * g / r
    cos_half = math.sqrt((1.0 + cos_t) / 2.0)
    sin_half = sin_t / (2.0 * cos_half)
    return GivensRotation(i, j, cos_half, sin_half, phi, degenerate=(delta == 0.0))


def _block_params(rot: GivensRotation) -> tuple[float, complex]:
    """(c, s) of the embedded block [[c, -conj(s)], [s, c]]."""
    return rot.cos_half, -rot.sin_half * np.exp(1j * rot.phase)


def _conjugate_dense(mat: np.ndarray, rot: GivensRotation) -> np.ndarray:
    i, j = rot.i, rot.j
    c, s = _block_params(rot)
    out = mat.copy()
    ri, rj = out[i, :].copy(), out[j, :].copy()
    out[i, :] = c * ri - np.conj(s) * rj
    out[j, :] = s * ri + c * rj
    ci, cj = out[:, i].copy(), out[:, j].copy()
    out[:, i] = c * ci - s * cj
    out[:, j] = np.conj(s) * ci + c * cj
    # pin the touched cross to exact Hermitian form
    out[i, i] = out[i, i].real
    out[j, j] = out[j, j].real
    out[j, i] = np.conj(out[i, j])
    return out


def _row_combination(m, i, j, wi, wj):
    """Sorted (cols, vals) of wi * row_i + wj * row_j of a CSR matrix."""
    ci = m.indices[m.indptr[i]:m.indptr[i + 1]]
    vi = m.data[m.indptr[i]:m.indptr[i + 1]]
    cj = m.indices[m.indptr[j]:m.indptr[j + 1]]
    vj = m.data[m.indptr[j]:m.indptr[j + 1]]
    cols = np.concatenate([ci, cj])
    vals = np.concatenate([wi * vi, wj * vj])
    uniq, inv = np.unique(cols, return_inverse=True)
    acc = np.zeros(uniq.size, dtype=np.complex128)
    np.add.at(acc, inv, vals)
    return uniq, acc


def _get_at(cols, vals, k) -> complex:
    pos = np.searchsorted(cols, k)
    if pos < cols.size and cols[pos] == k:
        return complex(vals[pos])
    return 0.0


def _set_at(cols, vals, k, value):
    pos = int(np.searchsorted(cols, k))
    if pos < cols.size and cols[pos] == k:
        vals[pos] = value
        return cols, vals
    return np.insert(cols, pos, k), np.insert(vals, pos, value)


def _conjugate_sparse(op: HermitianOperator, rot: GivensRotation) -> sps.csr_matrix:
    """Two-row/two-column CSR update; never a general sparse matrix product."""
    m = op.data
    i, j = rot.i, rot.j
    c, s = _block_params(rot)

    # left factor: rows i, j of U @ H
    ca, va = _row_combination(m, i, j, c, -np.conj(s))
    cb, vb = _row_combination(m, i, j, s, c)

    # right factor U^dag only mixes columns i and j inside those rows
    ai, aj = _get_at(ca, va, i), _get_at(ca, va, j)
    bi, bj = _get_at(cb, vb, i), _get_at(cb, vb, j)
    new_ai = (c * ai - s * aj).real  # diagonal stays real
    new_aj = np.conj(s) * ai + c * aj
    new_bj = (np.conj(s) * bi + c * bj).real
    ca, va = _set_at(ca, va, i, new_ai)
    ca, va = _set_at(ca, va, j, new_aj)
    cb, vb = _set_at(cb, vb, i, np.conj(new_aj))  # exact mirror of (i, j)
    cb, vb = _set_at(cb, vb, j, new_bj)

    drop = SPARSE_FILL_DROP * op.max_abs()
    keep_a = np.abs(va) > drop
    keep_b = np.abs(vb) > drop
    ca, va = ca[keep_a], va[keep_a]
    cb, vb = cb[keep_b], vb[keep_b]

    # zero the old rows/columns i, j in place on a copied value array
    data = m.data.copy()
    data[m.indptr[i]:m.indptr[i + 1]] = 0
    data[m.indptr[j]:m.indptr[j + 1]] = 0
    data[np.isin(m.indices, (i, j))] = 0
    base = sps.csr_matrix((data, m.indices.copy(), m.indptr.copy()), shape=m.shape)

    # delta = new rows i, j plus their Hermitian column images
    other_a = (ca != i) & (ca != j)
    other_b = (cb != i) & (cb != j)
    rows = np.concatenate([
        np.full(ca.size, i, dtype=np.int64),
        np.full(cb.size, j, dtype=np.int64),
        ca[other_a].astype(np.int64),
        cb[other_b].astype(np.int64),
    ])
    cols = np.concatenate([
        ca.astype(np.int64),
        cb.astype(np.int64),
        np.full(int(other_a.sum()), i, dtype=np.int64),
        np.full(int(other_b.sum()), j, dtype=np.int64),
    ])
    vals = np.concatenate([va, vb, np.conj(va[other_a]), np.conj(vb[other_b])])
    delta = sps.csr_matrix((vals, (rows, cols)), shape=m.shape)

    out = base + delta
    out.eliminate_zeros()
    out.sort_indices()
    return out


def unitary_transformation(op: HermitianOperator, rot: GivensRotation) -> HermitianOperator:
    """Conjugate ``op`` by the rotation: U H U^dag. Only rows/columns i, j change."""
    if rot.j >= op.dim:
        raise IndexOutOfRange(f"rotation indices ({rot.i}, {rot.j}) exceed dim {op.dim}")
    if op.layout == "dense":
        return HermitianOperator(_conjugate_dense(op.data, rot), validate=False)
    return HermitianOperator(_conjugate_sparse(op, rot), validate=False)


def _apply_left(u: np.ndarray, rot: GivensRotation) -> np.ndarray:
    """Accumulate: G @ U, touching rows i and j only."""
    c, s = _block_params(rot)
    out = u.copy()
    ri, rj = out[rot.i, :].copy(), out[rot.j, :].copy()
    out[rot.i, :] = c * ri - np.conj(s) * rj
    out[rot.j, :] = s * ri + c * rj
    return out


def _audit_unitary(u: np.ndarray, applied: int) -> None:
    if applied % UNITARY_CHECK_EVERY != 0:
        return
    drift = np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]))
    if drift > UNITARY_DRIFT_TOL * u.shape[0]:
        raise UnitarityDrift(f"accumulated unitary drift {drift:.3e} after {applied} rotations")


def eliminate_coupling(state: NPADState, i: int, j: int) -> NPADState:
    """Zero one coupling: build the rotation from the current operator and apply it."""
    rot = givens_rotation_matrix(state.current, i, j)
    new_op = unitary_transformation(state.current, rot)
    applied = state.applied + 1
    u = state.accumulated_unitary
    if u is not None:
        u = _apply_left(u, rot)
        _audit_unitary(u, applied)
    return replace(state, current=new_op, applied=applied, accumulated_unitary=u)


def eliminate_couplings(state: NPADState, pairs: Sequence[tuple[int, int]]) -> NPADState:
    """Zero several couplings with one combined unitary.

    All rotations are built from the same input operator; the pairs must be
    pairwise index-disjoint, so the rotations commute and their product
    applied once equals applying them in any order.
    """
    pairs = list(pairs)
    if not pairs:
        return state
    flat = [k for pair in pairs for k in pair]
    if len(set(flat)) != len(flat):
        raise OverlappingPairs(f"index pairs share an index: {pairs}")
    rotations = [givens_rotation_matrix(state.current, i, j) for i, j in pairs]
    op = state.current
    u = state.accumulated_unitary
    applied = state.applied
    for rot in rotations:
        op = unitary_transformation(op, rot)
        applied += 1
        if u is not None:
            u = _apply_left(u, rot)
            _audit_unitary(u, applied)
    return replace(state, current=op, applied=applied, accumulated_unitary=u)


def _largest_relevant(op: HermitianOperator, target: frozenset[int] | None):
    """Largest coupling overall, or largest crossing the target subspace boundary.

    Returns (row, col, magnitude) or None. Ties break by (row, col)
    lexicographic order, matching ``largest_couplings``.
    """
    r, c, v = op._lower_triangle()
    if target is not None and r.size:
        idx = np.fromiter(target, dtype=np.int64)
        crossing = np.isin(r, idx) ^ np.isin(c, idx)
        r, c, v = r[crossing], c[crossing], v[crossing]
    if not r.size:
        return None
    mags = np.abs(v)
    k = np.lexsort((r, c, -mags))[0]
    if mags[k] == 0.0:
        return None
    return int(c[k]), int(r[k]), float(mags[k])


def npad_run(
    op: HermitianOperator,
    target: Iterable[int] | None = None,
    *,
    tol: float,
    max_iter: int | None = None,
    track_unitary: bool = False,
) -> NPADState:
    """Eliminate the largest remaining coupling until convergence.

    ``target=None`` drives toward a full diagonal; a collection of indices
    decouples that subspace instead, eliminating only couplings with exactly
    one endpoint inside the subspace. Convergence means every relevant
    magnitude fell below ``tol * max|op|`` (threshold fixed from the input
    operator). Hitting ``max_iter`` (default ``20 * dim**2``) sets
    ``converged=False`` on the returned state rather than raising.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = 20 * op.dim * op.dim
    target_set = frozenset(int(k) for k in target) if target is not None else None
    if target_set is not None and target_set and max(target_set) >= op.dim:
        raise IndexOutOfRange("target indices exceed operator dimension")
    threshold = tol * op.max_abs()
    state = NPADState.from_operator(op, track_unitary=track_unitary)
    while True:
        pick = _largest_relevant(state.current, target_set)
        if pick is None or pick[2] < threshold:
            state.converged = True
            return state
        if state.applied >= max_iter:
            state.converged = False
            return state
        state = eliminate_coupling(state, pick[0], pick[1])
