"""Experiment and benchmark runners behind the command-line interface.

Every runner takes a validated config and returns ``(fieldnames, rows)``
ready for CSV emission. Reruns with the same config and seed produce
identical values except in wall-time columns.
"""

from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BenchMemoryError, ConfigError, EffHamError
from .magnus import ControlGrid, evolve
from .models import (
    DrivenQubitParams,
    JCSiteParams,
    SpinChainParams,
    driven_qubit_rotating_hamiltonian,
    jc_onsite_hamiltonian,
    ladder_test_hamiltonian,
    mott_lobe_boundary_analytic,
    mott_lobe_boundary_dense,
    mott_lobe_boundary_npad,
    spin_chain_hamiltonians,
    synthetic_transfer_pulse,
)
from .npad import NPADState, eliminate_coupling
from .reference import rk4_evolve

MIN_REPEATS = 5


def relative_error(value: float, reference: float) -> float:
    """|value - reference| / max(|reference|, tiny); never divides by zero."""
    return abs(value - reference) / max(abs(reference), 1e-300)


def state_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two state vectors."""
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


# -- configs -------------------------------------------------------------------


def config_from_dict(cls, data: dict | None):
    """Build a config dataclass from a plain dict, rejecting unknown keys."""
    data = dict(data or {})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {cls.__name__}: {unknown}")
    try:
        cfg = cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config for {cls.__name__}: {exc}") from exc
    cfg.validate()
    return cfg


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass
class JchMottConfig:
    n_lobes: int = 5
    grid_points: int = 41
    delta_over_g_min: float = -2.0
    delta_over_g_max: float = 2.0
    omega: float = 1.0
    g: float = 0.5
    mu: float = 0.0
    n_max: int = 8
    seed: int = 0

    def validate(self) -> None:
        _require(self.n_lobes >= 1, "n_lobes must be at least 1")
        _require(self.grid_points >= 2, "grid_points must be at least 2")
        _require(self.delta_over_g_max > self.delta_over_g_min, "empty detuning range")
        _require(self.g > 0, "g must be positive")
        _require(self.n_max > self.n_lobes + 1, "n_max must exceed n_lobes + 1")


@dataclass
class DrivenQubitConfig:
    omega: float = 1.0
    drive_ratio: float = 0.33
    envelope: str = "constant"
    t_final: float = 100.0
    samples: int = 40001
    m_magnus: int = 50
    m_reference: int = 5000

    def validate(self) -> None:
        _require(self.omega > 0, "omega must be positive")
        _require(self.drive_ratio >= 0, "drive_ratio must be non-negative")
        _require(self.t_final > 0, "t_final must be positive")
        _require(self.m_magnus >= 1 and self.m_reference >= 1, "interval counts must be positive")
        _require(
            self.m_reference % self.m_magnus == 0,
            "m_reference must be a multiple of m_magnus so strobe points align",
        )
        steps = self.samples - 1
        _require(steps % self.m_reference == 0, "m_reference must divide samples - 1")
        _require(steps % self.m_magnus == 0, "m_magnus must divide samples - 1")


@dataclass
class SpinChainConfig:
    mode: str = "trajectory"  # trajectory | error-sweep | timing
    length: int = 6
    lengths: list = field(default_factory=lambda: [6, 7, 8, 9, 10])  # timing mode
    qubit_freq: float = 0.0
    j_nn: float = 0.5
    g_nnn: float = 0.2
    t_final: float = 25.0
    samples: int | None = None
    m_magnus: int = 20
    rk_steps: int = 1000
    sweep_m: list = field(default_factory=lambda: [5, 10, 20, 40, 80, 160])
    m_reference: int = 640
    sweep_rk: list = field(default_factory=lambda: [50, 100, 250, 500, 1000])
    rk_reference: int = 8000
    pulse_amplitude: float = 1.0
    pulse_modes: int = 8
    seed: int = 7
    parallelism: int = 1
    repeats: int = MIN_REPEATS

    def validate(self) -> None:
        _require(self.mode in ("trajectory", "error-sweep", "timing"), f"unknown mode {self.mode!r}")
        _require(3 <= self.length <= 14, "length must be within [3, 14]")
        _require(all(3 <= v <= 14 for v in self.lengths), "lengths must be within [3, 14]")
        _require(self.t_final > 0, "t_final must be positive")
        _require(self.pulse_amplitude >= 0, "pulse_amplitude must be non-negative")
        if self.samples is None:
            self.samples = self._default_samples()
        steps = self.samples - 1
        if self.mode == "error-sweep":
            needed = list(self.sweep_m) + [self.m_reference]
            for m in needed:
                _require(steps % m == 0, f"{m} Magnus intervals must divide samples - 1")
            for s in list(self.sweep_rk) + [self.rk_reference]:
                _require(steps % (2 * s) == 0, f"2*{s} RK steps must divide samples - 1")
        else:
            _require(steps % self.m_magnus == 0, "m_magnus must divide samples - 1")
            _require(steps % (2 * self.rk_steps) == 0, "2*rk_steps must divide samples - 1")
        if self.mode == "timing":
            _require(self.repeats >= MIN_REPEATS, f"timing needs at least {MIN_REPEATS} repeats")

    def _default_samples(self) -> int:
        if self.mode == "error-sweep":
            return 16001
        return 20001


@dataclass
class BenchGivensConfig:
    sizes: list = field(default_factory=lambda: [1_000, 10_000, 100_000, 1_000_000])
    repeats: int = MIN_REPEATS
    parallelism: int = 1
    seed: int = 0

    def validate(self) -> None:
        _require(bool(self.sizes), "sizes must not be empty")
        _require(all(int(s) >= 2 for s in self.sizes), "sizes must be at least 2")
        _require(self.repeats >= MIN_REPEATS, f"need at least {MIN_REPEATS} repeats")


@dataclass
class BenchMagnusConfig:
    lengths: list = field(default_factory=lambda: [6, 7, 8, 9, 10])
    qubit_freq: float = 0.0
    j_nn: float = 0.5
    g_nnn: float = 0.2
    t_final: float = 25.0
    samples: int = 8001
    m_magnus: int = 20
    rk_steps: int = 1000
    reference_factor: int = 4
    pulse_amplitude: float = 1.0
    pulse_modes: int = 8
    seed: int = 7
    repeats: int = MIN_REPEATS
    parallelism: int = 1

    def validate(self) -> None:
        _require(all(3 <= v <= 14 for v in self.lengths), "lengths must be within [3, 14]")
        _require(self.t_final > 0, "t_final must be positive")
        _require(self.reference_factor >= 2, "reference_factor must be at least 2")
        _require(self.repeats >= MIN_REPEATS, f"need at least {MIN_REPEATS} repeats")
        steps = self.samples - 1
        for m in (self.m_magnus, self.m_magnus * self.reference_factor):
            _require(steps % m == 0, f"{m} Magnus intervals must divide samples - 1")
        for s in (self.rk_steps, self.rk_steps * self.reference_factor):
            _require(steps % (2 * s) == 0, f"2*{s} RK steps must divide samples - 1")


# -- timing helper -------------------------------------------------------------


def _time_repeats(fn, repeats: int) -> tuple[float, float, float]:
    """Median/min/max wall time over ``repeats`` calls, one warm-up discarded."""
    fn()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times)), float(min(times)), float(max(times))


# -- runners -------------------------------------------------------------------

JCH_MOTT_FIELDS = [
    "n",
    "delta_over_g",
    "boundary_npad",
    "boundary_dense_eig",
    "boundary_analytic",
    "rel_err_npad",
    "rel_err_dense",
]


def run_jch_mott(cfg: JchMottConfig):
    """Mott-lobe boundaries over the detuning grid for lobes 1..n_lobes."""
    grid = np.linspace(cfg.delta_over_g_min, cfg.delta_over_g_max, cfg.grid_points)
    rows = []
    for n in range(1, cfg.n_lobes + 1):
        for dg in grid:
            p = JCSiteParams(
                omega=cfg.omega,
                qubit_freq=cfg.omega - dg * cfg.g,
                g=cfg.g,
                mu=cfg.mu,
                n_max=cfg.n_max,
            )
            b_npad = mott_lobe_boundary_npad(p, n)
            b_dense = mott_lobe_boundary_dense(p, n)
            b_true = mott_lobe_boundary_analytic(n, float(dg))
            rows.append(
                {
                    "n": n,
                    "delta_over_g": float(dg),
                    "boundary_npad": b_npad,
                    "boundary_dense_eig": b_dense,
                    "boundary_analytic": b_true,
                    "rel_err_npad": relative_error(b_npad, b_true),
                    "rel_err_dense": relative_error(b_dense, b_true),
                }
            )
    return JCH_MOTT_FIELDS, rows


DRIVEN_QUBIT_FIELDS = [
    "t_strobe",
    "pop_excited_full_ref",
    "pop_excited_magnus",
    "pop_excited_rwa",
]


def run_driven_qubit(cfg: DrivenQubitConfig):
    """Stroboscopic excited-state population: full reference vs coarse
    Magnus vs the rotating-wave approximation."""
    p = DrivenQubitParams(cfg.omega, cfg.drive_ratio * cfg.omega, cfg.envelope)
    ch, grid = driven_qubit_rotating_hamiltonian(p, cfg.t_final, cfg.samples)
    ch_rwa, grid_rwa = driven_qubit_rotating_hamiltonian(p, cfg.t_final, cfg.samples, rwa=True)
    psi0 = np.array([1.0, 0.0], dtype=np.complex128)

    ref = evolve(ch, grid, cfg.m_reference, psi0)
    coarse = evolve(ch, grid, cfg.m_magnus, psi0)
    rwa = evolve(ch_rwa, grid_rwa, cfg.m_reference, psi0)

    stride = cfg.m_reference // cfg.m_magnus
    pop_ref = ref.populations([1])[::stride, 0]
    pop_coarse = coarse.populations([1])[:, 0]
    pop_rwa = rwa.populations([1])[::stride, 0]
    rows = [
        {
            "t_strobe": float(t),
            "pop_excited_full_ref": float(a),
            "pop_excited_magnus": float(b),
            "pop_excited_rwa": float(c),
        }
        for t, a, b, c in zip(coarse.times, pop_ref, pop_coarse, pop_rwa)
    ]
    return DRIVEN_QUBIT_FIELDS, rows


def _spin_chain_setup(length, cfg):
    p = SpinChainParams(length, cfg.qubit_freq, cfg.j_nn, cfg.g_nnn)
    ch = spin_chain_hamiltonians(p)
    grid = synthetic_transfer_pulse(
        cfg.t_final,
        cfg.samples,
        cfg.seed,
        amplitude=cfg.pulse_amplitude,
        modes=cfg.pulse_modes,
    )
    psi0 = np.zeros(ch.dim, dtype=np.complex128)
    psi0[0] = 1.0
    return ch, grid, psi0


SPIN_TRAJ_FIELDS = ["t", "p0", "p1", "p_rest"]
SPIN_SWEEP_FIELDS = ["method", "resolution", "error"]
TIMING_FIELDS = [
    "method",
    "length",
    "dim",
    "repeats",
    "time_median_s",
    "time_min_s",
    "time_max_s",
    "parallelism",
]


def run_spin_chain(cfg: SpinChainConfig):
    """State-transfer experiment on the controlled spin chain.

    Modes: ``trajectory`` emits the ground-pair populations at strobe
    points, ``error-sweep`` emits final-state error against same-method
    references over interval/step counts, ``timing`` emits wall times per
    chain length for both evolution methods.
    """
    if cfg.mode == "trajectory":
        ch, grid, psi0 = _spin_chain_setup(cfg.length, cfg)
        traj = evolve(ch, grid, cfg.m_magnus, psi0, workers=cfg.parallelism)
        pops = traj.populations()
        rows = [
            {
                "t": float(t),
                "p0": float(pop[0]),
                "p1": float(pop[-1]),
                "p_rest": float(pop[1:-1].sum()),
            }
            for t, pop in zip(traj.times, pops)
        ]
        return SPIN_TRAJ_FIELDS, rows

    if cfg.mode == "error-sweep":
        ch, grid, psi0 = _spin_chain_setup(cfg.length, cfg)
        ref_m = evolve(ch, grid, cfg.m_reference, psi0).amplitudes[-1]
        ref_rk = rk4_evolve(ch, grid, cfg.rk_reference, psi0).amplitudes[-1]
        rows = []
        for m in cfg.sweep_m:
            final = evolve(ch, grid, int(m), psi0, workers=cfg.parallelism).amplitudes[-1]
            rows.append({"method": "magnus", "resolution": int(m), "error": state_distance(final, ref_m)})
        for steps in cfg.sweep_rk:
            final = rk4_evolve(ch, grid, int(steps), psi0).amplitudes[-1]
            rows.append({"method": "rk4", "resolution": int(steps), "error": state_distance(final, ref_rk)})
        return SPIN_SWEEP_FIELDS, rows

    # timing mode
    rows = []
    for length in cfg.lengths:
        ch, grid, psi0 = _spin_chain_setup(int(length), cfg)
        med, lo, hi = _time_repeats(
            lambda: evolve(ch, grid, cfg.m_magnus, psi0, workers=cfg.parallelism, check=False),
            cfg.repeats,
        )
        rows.append(
            {
                "method": "magnus",
                "length": int(length),
                "dim": ch.dim,
                "repeats": cfg.repeats,
                "time_median_s": med,
                "time_min_s": lo,
                "time_max_s": hi,
                "parallelism": cfg.parallelism,
            }
        )
        med, lo, hi = _time_repeats(lambda: rk4_evolve(ch, grid, cfg.rk_steps, psi0), cfg.repeats)
        rows.append(
            {
                "method": "rk4",
                "length": int(length),
                "dim": ch.dim,
                "repeats": cfg.repeats,
                "time_median_s": med,
                "time_min_s": lo,
                "time_max_s": hi,
                "parallelism": cfg.parallelism,
            }
        )
    return TIMING_FIELDS, rows


BENCH_GIVENS_FIELDS = [
    "case_id",
    "dim",
    "nnz",
    "repeats",
    "time_median_s",
    "time_min_s",
    "time_max_s",
    "backend",
    "parallelism",
]


def _smallest_coupling_pair(op) -> tuple[int, int]:
    rows, cols, vals = op._lower_triangle()
    mags = np.abs(vals)
    k = np.lexsort((rows, cols, mags))[0]
    return int(cols[k]), int(rows[k])


def bench_givens(cfg: BenchGivensConfig):
    """Wall time of one coupling elimination on the ladder test matrix.

    The smallest coupling is removed, matching the protocol where the
    choice of pivot does not affect cost. Memory exhaustion is surfaced
    with the failing size.
    """
    rows = []
    for size in cfg.sizes:
        size = int(size)
        try:
            op = ladder_test_hamiltonian(size)
        except MemoryError as exc:
            raise BenchMemoryError(size) from exc
        i, j = _smallest_coupling_pair(op)

        def one_rotation():
            eliminate_coupling(NPADState.from_operator(op), i, j)

        med, lo, hi = _time_repeats(one_rotation, cfg.repeats)
        rows.append(
            {
                "case_id": f"givens-n{size}",
                "dim": size,
                "nnz": op.nnz,
                "repeats": cfg.repeats,
                "time_median_s": med,
                "time_min_s": lo,
                "time_max_s": hi,
                "backend": "scipy-sparse-csr",
                "parallelism": cfg.parallelism,
            }
        )
    return BENCH_GIVENS_FIELDS, rows


BENCH_MAGNUS_FIELDS = [
    "method",
    "length",
    "dim",
    "repeats",
    "time_median_s",
    "time_min_s",
    "time_max_s",
    "error",
    "parallelism",
]


def bench_magnus(cfg: BenchMagnusConfig):
    """Coarse Magnus evolution vs the fixed-step RK4 baseline at matched error.

    For each chain length the final-state error of both methods (measured
    against a finer same-method reference) must agree within a factor of
    two before any timing happens; the two final states must also agree
    within the sum of their errors.
    """
    spin_cfg = SpinChainConfig(
        mode="trajectory",
        qubit_freq=cfg.qubit_freq,
        j_nn=cfg.j_nn,
        g_nnn=cfg.g_nnn,
        t_final=cfg.t_final,
        samples=cfg.samples,
        m_magnus=cfg.m_magnus,
        rk_steps=cfg.rk_steps,
        pulse_amplitude=cfg.pulse_amplitude,
        pulse_modes=cfg.pulse_modes,
        seed=cfg.seed,
    )
    rows = []
    for length in cfg.lengths:
        ch, grid, psi0 = _spin_chain_setup(int(length), spin_cfg)
        final_m = evolve(ch, grid, cfg.m_magnus, psi0, workers=cfg.parallelism, check=False).amplitudes[-1]
        ref_m = evolve(
            ch, grid, cfg.m_magnus * cfg.reference_factor, psi0, workers=cfg.parallelism, check=False
        ).amplitudes[-1]
        final_rk = rk4_evolve(ch, grid, cfg.rk_steps, psi0).amplitudes[-1]
        ref_rk = rk4_evolve(ch, grid, cfg.rk_steps * cfg.reference_factor, psi0).amplitudes[-1]
        err_m = state_distance(final_m, ref_m)
        err_rk = state_distance(final_rk, ref_rk)
        if max(err_m, err_rk) > 2.0 * min(err_m, err_rk):
            raise EffHamError(
                f"length {length}: method errors not matched within 2x "
                f"(magnus {err_m:.3e}, rk4 {err_rk:.3e}); adjust intervals or steps"
            )
        cross = state_distance(final_m, final_rk)
        if cross > err_m + err_rk:
            raise EffHamError(
                f"length {length}: methods disagree ({cross:.3e}) beyond combined error "
                f"({err_m:.3e} + {err_rk:.3e})"
            )
        med, lo, hi = _time_repeats(
            lambda: evolve(ch, grid, cfg.m_magnus, psi0, workers=cfg.parallelism, check=False),
            cfg.repeats,
        )
        rows.append(
            {
                "method": "magnus",
                "length": int(length),
                "dim": ch.dim,
                "repeats": cfg.repeats,
                "time_median_s": med,
                "time_min_s": lo,
                "time_max_s": hi,
                "error": err_m,
                "parallelism": cfg.parallelism,
            }
        )
        med, lo, hi = _time_repeats(lambda: rk4_evolve(ch, grid, cfg.rk_steps, psi0), cfg.repeats)
        rows.append(
            {
                "method": "rk4",
                "length": int(length),
                "dim": ch.dim,
                "repeats": cfg.repeats,
                "time_median_s": med,
                "time_min_s": lo,
                "time_max_s": hi,
                "error": err_rk,
                "parallelism": cfg.parallelism,
            }
        )
    return BENCH_MAGNUS_FIELDS, rows


# -- CSV emission ---------------------------------------------------------------


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, fieldnames, rows) -> None:
    """UTF-8 CSV with a header row and LF line endings."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_value(v) for k, v in row.items()})
