"""Fixed-step integrators used as in-package comparison baselines."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, GridMismatch
from .magnus import ControlGrid, ControlledHamiltonian, Trajectory, _as_state


def rk4_evolve(
    ch: ControlledHamiltonian, grid: ControlGrid, steps: int, psi0
) -> Trajectory:
    """Classical 4th-order Runge-Kutta on the sampled Hamiltonian.

    The step count must satisfy 2*steps | (samples - 1) so that the
    half-step Hamiltonians are read off exact grid samples rather than
    interpolated.
    """
    if grid.num_controls != ch.num_controls:
        raise DimensionMismatch(
            f"grid carries {grid.num_controls} signals, Hamiltonian has {ch.num_controls} controls"
        )
    steps = int(steps)
    if steps < 1:
        raise GridMismatch("need at least one step")
    sample_steps = grid.samples - 1
    if sample_steps % (2 * steps):
        raise GridMismatch(
            f"{steps} RK steps need 2*steps to divide {sample_steps} sample steps"
        )
    stride = sample_steps // steps
    half = stride // 2
    h = (grid.t_end - grid.t_start) / steps

    drift = ch.drift.data
    ctrls = [c.data for c in ch.controls]
    sig = grid.signals

    def ham(idx: int):
        m = drift
        for k, ctrl in enumerate(ctrls):
            m = m + sig[k, idx] * ctrl
        return m

    psi = _as_state(psi0)
    if psi.size != ch.dim:
        raise DimensionMismatch(f"state dim {psi.size} does not match operator dim {ch.dim}")
    traj = np.empty((steps + 1, ch.dim), dtype=np.complex128)
    traj[0] = psi

    h_lo = ham(0)
    for n in range(steps):
        h_mid = ham(n * stride + half)
        h_hi = ham((n + 1) * stride)
        k1 = -1j * (h_lo @ psi)
        k2 = -1j * (h_mid @ (psi + (h / 2.0) * k1))
        k3 = -1j * (h_mid @ (psi + (h / 2.0) * k2))
        k4 = -1j * (h_hi @ (psi + h * k3))
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[n + 1] = psi
        h_lo = h_hi

    times = np.linspace(grid.t_start, grid.t_end, steps + 1)
    return Trajectory(times, traj)
