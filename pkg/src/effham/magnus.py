"""First-order coarse-grained time evolution for controlled Hamiltonians.

The system is H(t) = H0 + sum_k u_k(t) * H_k with time-independent drift
and control operators and sampled control signals u_k. The evolution window
splits into M equal intervals; over interval n the time-dependent
Hamiltonian is replaced by its running integral

    Hbar_n = dt * H0 + sum_k c_{n,k} * H_k,
    c_{n,k} = integral of u_k over interval n (composite trapezoid),

and the state advances by the unitary exp(-i * Hbar_n). The output is
stroboscopic: states are meaningful only at interval boundaries, so only
those are returned.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .errors import DimensionMismatch, GridMismatch, NormDrift
from .expm import UnitaryPropagator, expm_batch, expm_unitary
from .operators import HermitianOperator

NORM_DRIFT_TOL = 1e-6


class ControlledHamiltonian:
    """Drift operator plus a list of control operators, all of one dimension."""

    def __init__(self, drift: HermitianOperator, controls=()):
        self.drift = drift
        self.controls = list(controls)
        for k, ctrl in enumerate(self.controls):
            if ctrl.dim != drift.dim:
                raise DimensionMismatch(
                    f"control {k} has dim {ctrl.dim}, drift has dim {drift.dim}"
                )

    @property
    def dim(self) -> int:
        return self.drift.dim

    @property
    def num_controls(self) -> int:
        return len(self.controls)

    def all_sparse(self) -> bool:
        return self.drift.layout == "sparse" and all(c.layout == "sparse" for c in self.controls)


class ControlGrid:
    """Uniform time grid carrying one sampled real signal per control channel.

    ``signals`` has shape (num_controls, samples); a grid with no channels
    (time-independent Hamiltonian) is built by passing ``samples`` alone.
    """

    def __init__(self, t_start: float, t_end: float, signals=None, *, samples: int | None = None):
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if signals is None:
            if samples is None:
                raise ValueError("need signals or an explicit sample count")
            signals = np.empty((0, int(samples)), dtype=np.float64)
        signals = np.atleast_2d(np.asarray(signals, dtype=np.float64))
        if signals.shape[1] < 2:
            raise ValueError("grid needs at least 2 samples")
        if not np.isfinite(signals).all():
            raise ValueError("control signals contain NaN or Inf")
        self.signals = signals

    @property
    def samples(self) -> int:
        return self.signals.shape[1]

    @property
    def num_controls(self) -> int:
        return self.signals.shape[0]

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.samples - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.samples)

    def with_signals(self, signals) -> "ControlGrid":
        """Same grid, new control signals (sample count must match)."""
        new = ControlGrid(self.t_start, self.t_end, signals)
        if new.samples != self.samples:
            raise GridMismatch(f"expected {self.samples} samples, got {new.samples}")
        return new


@dataclass(frozen=True)
class MagnusIntervalSet:
    """Per-interval integral coefficients and assembled effective Hamiltonians."""

    num_intervals: int
    dt: float
    coefficients: np.ndarray  # (M, K)
    effective_hams: list


class StateVector:
    """Normalized complex amplitude vector."""

    def __init__(self, amplitudes):
        amp = np.asarray(amplitudes, dtype=np.complex128).ravel()
        nrm = float(np.linalg.norm(amp))
        if abs(nrm - 1.0) > NORM_DRIFT_TOL:
            raise ValueError(f"state norm {nrm!r} is not 1")
        self.amplitudes = amp

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class Trajectory:
    """Stroboscopic states: amplitudes[n] is the state at times[n]."""

    times: np.ndarray       # (M + 1,)
    amplitudes: np.ndarray  # (M + 1, dim)

    @property
    def final(self) -> StateVector:
        return StateVector(self.amplitudes[-1])

    def state(self, n: int) -> StateVector:
        return StateVector(self.amplitudes[n])

    def populations(self, indices=None) -> np.ndarray:
        pops = np.abs(self.amplitudes) ** 2
        if indices is None:
            return pops
        return pops[:, list(indices)]


def magnus_coefficients(grid: ControlGrid, num_intervals: int) -> np.ndarray:
    """(M, K) integrals of each control signal over each interval.

    Composite trapezoid on the sample grid; exact (to round-off) for signals
    affine in t. The interval count must divide the sample-step count so
    every interval holds an integer number of sub-steps.
    """
    m_int = int(num_intervals)
    if m_int < 1:
        raise GridMismatch("need at least one interval")
    steps = grid.samples - 1
    if steps % m_int:
        raise GridMismatch(f"{m_int} intervals do not divide {steps} sample steps")
    sub = steps // m_int
    k = grid.num_controls
    left = grid.signals[:, :-1].reshape(k, m_int, sub)
    right = grid.signals[:, 1:].reshape(k, m_int, sub)
    coeffs = (grid.dt / 2.0) * (left + right).sum(axis=2)
    return np.ascontiguousarray(coeffs.T)


def assemble_effective_hams(
    ch: ControlledHamiltonian, coeffs: np.ndarray, dt: float
) -> list[HermitianOperator]:
    """Hbar_n = dt * H0 + sum_k coeffs[n, k] * H_k, one operator per interval."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[1] != ch.num_controls:
        raise DimensionMismatch(
            f"coefficient matrix shape {coeffs.shape} does not match {ch.num_controls} controls"
        )
    sparse = ch.all_sparse()
    drift = ch.drift.data if sparse else ch.drift.to_dense()
    ctrls = [c.data if sparse else c.to_dense() for c in ch.controls]
    out = []
    for row in coeffs:
        h = dt * drift
        for w, ctrl in zip(row, ctrls):
            h = h + w * ctrl
        out.append(HermitianOperator(h, validate=False))
    return out


def magnus_intervals(ch: ControlledHamiltonian, grid: ControlGrid, num_intervals: int) -> MagnusIntervalSet:
    if grid.num_controls != ch.num_controls:
        raise DimensionMismatch(
            f"grid carries {grid.num_controls} signals, Hamiltonian has {ch.num_controls} controls"
        )
    coeffs = magnus_coefficients(grid, num_intervals)
    dt = (grid.t_end - grid.t_start) / num_intervals
    hams = assemble_effective_hams(ch, coeffs, dt)
    return MagnusIntervalSet(num_intervals, dt, coeffs, hams)


def _as_state(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes.copy()
    amp = np.asarray(psi, dtype=np.complex128).ravel()
    nrm = float(np.linalg.norm(amp))
    if abs(nrm - 1.0) > NORM_DRIFT_TOL:
        raise ValueError(f"initial state norm {nrm!r} is not 1")
    return amp.copy()


def evolve(
    ch: ControlledHamiltonian,
    grid: ControlGrid,
    num_intervals: int,
    psi0,
    *,
    path: str = "auto",
    workers: int | None = None,
    check: bool = True,
    return_propagators: bool = False,
):
    """Propagate psi0 through all intervals; returns the M+1 stroboscopic states.

    ``path="dense"`` materializes every interval propagator up front (batch,
    parallelizable); ``path="sparse"`` streams one interval at a time in a
    low-memory loop. Both give identical trajectories. ``check`` validates
    each propagator's unitarity; norm drift beyond 1e-6 raises NormDrift
    regardless, since it signals a misconfigured exponential.
    """
    psi = _as_state(psi0)
    if psi.size != ch.dim:
        raise DimensionMismatch(f"state dim {psi.size} does not match operator dim {ch.dim}")
    if path not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown path {path!r}")
    if path == "auto":
        path = "sparse" if ch.all_sparse() else "dense"

    iv = magnus_intervals(ch, grid, num_intervals)
    m_int = iv.num_intervals
    traj = np.empty((m_int + 1, ch.dim), dtype=np.complex128)
    traj[0] = psi
    collected: list[UnitaryPropagator] = []

    if path == "dense":
        props = expm_batch([h.to_dense() for h in iv.effective_hams], workers=workers, check=check)
        for n, prop in enumerate(props):
            psi = prop.entries @ psi
            _check_norm(psi, n)
            traj[n + 1] = psi
        collected = props
    else:
        for n, ham in enumerate(iv.effective_hams):
            prop = expm_unitary(ham.to_dense(), check=check)
            psi = prop.entries @ psi
            _check_norm(psi, n)
            traj[n + 1] = psi
            if return_propagators:
                collected.append(prop)

    times = np.linspace(grid.t_start, grid.t_end, m_int + 1)
    result = Trajectory(times, traj)
    if return_propagators:
        return result, collected
    return result


def _check_norm(psi: np.ndarray, interval: int) -> None:
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > NORM_DRIFT_TOL:
        raise NormDrift(f"state norm {nrm!r} after interval {interval}")


def infidelity(psi, target) -> float:
    """1 - |<target|psi>|^2 for normalized states of equal dimension."""
    a = _as_state(psi)
    b = _as_state(target)
    if a.size != b.size:
        raise DimensionMismatch(f"state dims differ: {a.size} vs {b.size}")
    overlap = np.vdot(b, a)
    return max(0.0, 1.0 - float(abs(overlap)) ** 2)


# -- CSV interfaces ----------------------------------------------------------


def load_control_grid(path) -> ControlGrid:
    """Read a grid from CSV with columns t, u1, u2, ... (header row required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    if not header or header[0] != "t":
        raise ValueError("first CSV column must be 't'")
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[0] < 2:
        raise ValueError("grid needs at least 2 samples")
    t = data[:, 0]
    spacing = np.diff(t)
    if spacing.size and not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
        raise ValueError("time column is not uniformly spaced")
    return ControlGrid(t[0], t[-1], data[:, 1:].T)


def save_control_grid(grid: ControlGrid, path) -> None:
    header = ["t"] + [f"u{k + 1}" for k in range(grid.num_controls)]
    times = grid.times
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for idx in range(grid.samples):
            writer.writerow([repr(float(times[idx]))] + [repr(float(v)) for v in grid.signals[:, idx]])


def save_trajectory(traj: Trajectory, path, populations=None) -> None:
    """Write a trajectory as CSV: populations of selected indices, or all
    amplitudes as re_k/im_k columns when ``populations`` is None."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if populations is None:
            dim = traj.amplitudes.shape[1]
            header = ["t"]
            for k in range(dim):
                header += [f"re_{k}", f"im_{k}"]
            writer.writerow(header)
            for t, amp in zip(traj.times, traj.amplitudes):
                row = [repr(float(t))]
                for k in range(dim):
                    row += [repr(float(amp[k].real)), repr(float(amp[k].imag))]
                writer.writerow(row)
        else:
            indices = list(populations)
            writer.writerow(["t"] + [f"pop_{k}" for k in indices])
            pops = traj.populations(indices)
            for t, row in zip(traj.times, pops):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
