"""Model builders and closed-form oracles for the example systems.

Three families cover everything the experiments and tests need:

* a qubit-cavity site (Jaynes-Cummings with chemical potential) whose
  polariton doublets and Mott-lobe boundaries have closed forms,
* a resonantly driven qubit in the frame rotating at the drive frequency,
  with and without the rotating-wave approximation,
* a periodic spin chain with Ising-type ZZ couplings and global X/Y
  control fields.

Energies are dimensionless (hbar = 1); time carries the inverse unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .errors import ChainTooLarge, TruncationTooSmall
from .magnus import ControlGrid, ControlledHamiltonian
from .npad import NPADState, eliminate_couplings
from .operators import HermitianOperator

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)

DENSE_PROPAGATION_MAX_LENGTH = 14


# -- qubit-cavity site --------------------------------------------------------


@dataclass(frozen=True)
class JCSiteParams:
    """One lattice site: cavity frequency, qubit frequency, coupling g,
    chemical potential mu, and cavity truncation (number of Fock levels)."""

    omega: float
    qubit_freq: float
    g: float
    mu: float = 0.0
    n_max: int = 8

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")
        if self.g < 0:
            raise ValueError("coupling must be non-negative")

    @property
    def detuning(self) -> float:
        """Cavity-qubit detuning omega - qubit_freq."""
        return self.omega - self.qubit_freq


def jc_onsite_hamiltonian(p: JCSiteParams) -> HermitianOperator:
    """Site Hamiltonian w*n_cav + eq*n_qubit + g*(a^dag s- + s+ a) - mu*N.

    Basis index is 2n + q with photon number n and qubit state q in {g=0,
    e=1}, so each excitation block n >= 1 occupies the adjacent index pair
    (2n - 1, 2n) = (|n-1, e>, |n, g>) with coupling strength g*sqrt(n).
    """
    dim = 2 * p.n_max
    idx = np.arange(dim)
    n_cav = idx // 2
    q = idx % 2
    diag = p.omega * n_cav + p.qubit_freq * q - p.mu * (n_cav + q)
    rows, cols, vals = [list(idx), list(idx), list(diag.astype(np.complex128))]
    for n in range(1, p.n_max):
        # <n, g| a^dag s- |n-1, e> = sqrt(n)
        rows += [2 * n, 2 * n - 1]
        cols += [2 * n - 1, 2 * n]
        vals += [p.g * np.sqrt(n), p.g * np.sqrt(n)]
    m = sps.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return HermitianOperator(m)


def jc_doublet_energies(p: JCSiteParams, n: int) -> tuple[float, float]:
    """Closed-form polariton doublet (E_minus, E_plus) of excitation block n.

    E_{n,+-} = n*omega - detuning/2 +- sqrt((detuning/2)^2 + n*g^2), without
    the chemical-potential shift -mu*n (add it separately when needed).
    """
    if n < 1:
        raise ValueError("blocks start at n = 1")
    half = p.detuning / 2.0
    center = n * p.omega - half
    split = np.hypot(half, np.sqrt(n) * p.g)
    return center - split, center + split


def mott_lobe_boundary_analytic(n: int, delta_over_g: float) -> float:
    """Chemical-potential boundary (mu - omega)/g between lobes n and n+1:
    sqrt(n + x^2) - sqrt(n+1 + x^2) with x = detuning/(2g)."""
    if n < 1:
        raise ValueError("lobes start at n = 1")
    x2 = (delta_over_g / 2.0) ** 2
    return float(np.sqrt(n + x2) - np.sqrt(n + 1 + x2))


def _lower_block_energies(diag: np.ndarray, p: JCSiteParams, n: int) -> tuple[float, float]:
    """E_{n,-} and E_{n+1,-} (chemical shift removed) from block-diagonal entries."""
    e_n = min(diag[2 * n - 1], diag[2 * n]) + p.mu * n
    e_n1 = min(diag[2 * n + 1], diag[2 * n + 2]) + p.mu * (n + 1)
    return e_n, e_n1


def mott_lobe_boundary_npad(p: JCSiteParams, n: int) -> float:
    """Boundary between lobes n and n+1 from iterative block diagonalization.

    One batched unitary built from rotations on the excitation blocks
    1..n+1 (pairwise disjoint index pairs) zeroes every block coupling at
    once; the boundary is where the lower (anti-symmetric) levels of blocks
    n and n+1 cost the same chemical potential. The result is independent
    of the mu used to build the operator.
    """
    if n < 1:
        raise ValueError("lobes start at n = 1")
    if n + 1 >= p.n_max:
        raise TruncationTooSmall(f"need n_max > {n + 1}, got {p.n_max}")
    if p.g == 0:
        raise ValueError("boundary in units of g is undefined for g = 0")
    op = jc_onsite_hamiltonian(p)
    pairs = [(2 * m - 1, 2 * m) for m in range(1, n + 2)]
    state = eliminate_couplings(NPADState.from_operator(op), pairs)
    e_n, e_n1 = _lower_block_energies(state.current.diagonal(), p, n)
    return (e_n1 - e_n - p.omega) / p.g


def mott_lobe_boundary_dense(p: JCSiteParams, n: int) -> float:
    """Same boundary via a dense eigensolver with excitation-number labeling."""
    if n < 1:
        raise ValueError("lobes start at n = 1")
    if n + 1 >= p.n_max:
        raise TruncationTooSmall(f"need n_max > {n + 1}, got {p.n_max}")
    if p.g == 0:
        raise ValueError("boundary in units of g is undefined for g = 0")
    mat = jc_onsite_hamiltonian(p).to_dense()
    evals, evecs = np.linalg.eigh(mat)
    idx = np.arange(mat.shape[0])
    excitation = idx // 2 + idx % 2  # eigenvalue of the conserved number operator
    labels = np.rint((np.abs(evecs) ** 2 * excitation[:, None]).sum(axis=0)).astype(int)
    lower = {}
    for lab, ev in zip(labels, evals):
        lower[lab] = min(ev, lower.get(lab, np.inf))
    e_n = lower[n] + p.mu * n
    e_n1 = lower[n + 1] + p.mu * (n + 1)
    return (e_n1 - e_n - p.omega) / p.g


def jch_lattice_hamiltonian(
    p: JCSiteParams, sites: int, hopping: float, *, periodic: bool = True
) -> HermitianOperator:
    """Chain of qubit-cavity sites with photon hopping at rate ``hopping``.

    H = sum_j H_site_j - hopping * sum_<i,j> (a_i^dag a_j + a_j^dag a_i),
    on the (2*n_max)^sites product space. Provided for completeness; the
    Mott-lobe computations use the single-site operator (in the decoupled
    small-hopping regime the sites separate exactly).
    """
    if sites < 1:
        raise ValueError("need at least one site")
    site_dim = 2 * p.n_max
    onsite = jc_onsite_hamiltonian(p).data
    lower = sps.diags(np.sqrt(np.arange(1, p.n_max)), 1, format="csr")  # cavity annihilation
    a_site = sps.kron(lower, sps.identity(2, format="csr"), format="csr")
    eye = sps.identity(site_dim, format="csr")

    def embed(op, site):
        factors = [eye] * sites
        factors[site] = op
        out = factors[0]
        for f in factors[1:]:
            out = sps.kron(out, f, format="csr")
        return out

    dim = site_dim**sites
    h = sps.csr_matrix((dim, dim), dtype=np.complex128)
    for j in range(sites):
        h = h + embed(onsite, j)
    bonds = [(j, j + 1) for j in range(sites - 1)]
    if periodic and sites > 2:
        bonds.append((sites - 1, 0))
    for i, j in bonds:
        hop = embed(a_site.conjugate().T, i) @ embed(a_site, j)
        h = h - hopping * (hop + hop.conjugate().T)
    return HermitianOperator(h)


def ladder_test_hamiltonian(n_levels: int) -> HermitianOperator:
    """Benchmark matrix a^dag a + (a + a^dag) on n_levels Fock states.

    Tridiagonal: diagonal 0..n-1 and couplings sqrt(n+1) on the first
    off-diagonals, so the smallest coupling is always the (0, 1) pair.
    """
    if n_levels < 2:
        raise ValueError("need at least 2 levels")
    off = np.sqrt(np.arange(1, n_levels, dtype=np.float64))
    m = sps.diags(
        [off, np.arange(n_levels, dtype=np.float64), off],
        offsets=[-1, 0, 1],
        format="csr",
        dtype=np.complex128,
    )
    return HermitianOperator(m, validate=False)


# -- driven qubit --------------------------------------------------------------


@dataclass(frozen=True)
class DrivenQubitParams:
    """Resonantly driven qubit: frequency, peak drive amplitude, envelope shape."""

    omega: float
    amp: float
    envelope: str = "constant"

    def __post_init__(self):
        if self.amp < 0:
            raise ValueError("drive amplitude must be non-negative")
        if self.envelope not in ("constant", "sin2"):
            raise ValueError(f"unknown envelope {self.envelope!r}")


def _envelope(p: DrivenQubitParams, t: np.ndarray, t_final: float) -> np.ndarray:
    if p.envelope == "constant":
        return np.full_like(t, p.amp)
    return p.amp * np.sin(np.pi * t / t_final) ** 2


def driven_qubit_rotating_hamiltonian(
    p: DrivenQubitParams, t_final: float, samples: int, *, rwa: bool = False
) -> tuple[ControlledHamiltonian, ControlGrid]:
    """Drive Hamiltonian in the frame rotating at the drive frequency.

    Full form: (Omega(t)/4) * (sx + cos(2wt) sx - sin(2wt) sy), returned as
    zero drift plus three control channels. With ``rwa=True`` the two
    counter-rotating channels are dropped, leaving (Omega(t)/4) sx. The
    grid must give the 2w oscillation at least 20 samples per period.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if p.omega > 0 and not rwa:
        per_period = (samples - 1) / (t_final * p.omega / np.pi)
        if per_period < 20:
            raise ValueError(
                f"{per_period:.1f} samples per counter-rotating period; need at least 20"
            )
    t = np.linspace(0.0, t_final, samples)
    base = _envelope(p, t, t_final) / 4.0
    drift = HermitianOperator(np.zeros((2, 2), dtype=np.complex128), validate=False)
    sx = HermitianOperator(SIGMA_X, validate=False)
    if rwa:
        ch = ControlledHamiltonian(drift, [sx])
        grid = ControlGrid(0.0, t_final, base[None, :])
        return ch, grid
    sy = HermitianOperator(SIGMA_Y, validate=False)
    signals = np.vstack([base, base * np.cos(2 * p.omega * t), -base * np.sin(2 * p.omega * t)])
    ch = ControlledHamiltonian(drift, [sx, sx, sy])
    return ch, ControlGrid(0.0, t_final, signals)


# -- spin chain -----------------------------------------------------------------


@dataclass(frozen=True)
class SpinChainParams:
    """Periodic chain: length, uniform qubit frequency, nearest-neighbor
    coupling j_nn and next-nearest-neighbor coupling g_nnn (all ZZ-type)."""

    length: int
    qubit_freq: float
    j_nn: float
    g_nnn: float

    def __post_init__(self):
        if self.length < 3:
            raise ValueError("periodic chain with next-nearest couplings needs length >= 3")


def spin_chain_hamiltonians(
    p: SpinChainParams, *, max_length: int = DENSE_PROPAGATION_MAX_LENGTH
) -> ControlledHamiltonian:
    """Drift (1/2) sum w sz_j - J sum sz_j sz_{j+1} - g2 sum sz_j sz_{j+2},
    periodic, plus global controls sum_j sx_j and sum_j sy_j.

    Site j maps to bit j of the basis index, so |0...0> is index 0 and
    |1...1> is the last index. All operators are sparse on dim 2**length.
    """
    if p.length > max_length:
        raise ChainTooLarge(f"length {p.length} exceeds dense-propagation limit {max_length}")
    length = p.length
    dim = 1 << length
    idx = np.arange(dim, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(length)) & 1
    z = 1 - 2 * bits  # sz eigenvalue per site
    diag = (
        0.5 * p.qubit_freq * z.sum(axis=1)
        - p.j_nn * (z * np.roll(z, -1, axis=1)).sum(axis=1)
        - p.g_nnn * (z * np.roll(z, -2, axis=1)).sum(axis=1)
    )
    drift = HermitianOperator(
        sps.diags(diag.astype(np.complex128), format="csr"), validate=False
    )

    rows = np.repeat(idx, length)
    flips = rows ^ (1 << np.tile(np.arange(length), dim))
    ones = np.ones(rows.size, dtype=np.complex128)
    sum_sx = sps.csr_matrix((ones, (flips, rows)), shape=(dim, dim))
    # sy|0> = i|1>, sy|1> = -i|0> at the flipped site
    bit_set = (rows >> np.tile(np.arange(length), dim)) & 1
    sy_vals = np.where(bit_set == 0, 1j, -1j)
    sum_sy = sps.csr_matrix((sy_vals, (flips, rows)), shape=(dim, dim))
    controls = [
        HermitianOperator(sum_sx, validate=False),
        HermitianOperator(sum_sy, validate=False),
    ]
    return ControlledHamiltonian(drift, controls)


def synthetic_transfer_pulse(
    t_final: float, samples: int, seed: int, *, amplitude: float = 1.0, modes: int = 8
) -> ControlGrid:
    """Deterministic band-limited random pulse for the two chain controls.

    Each channel is amplitude-scaled sum of at most ``modes`` sine modes
    sin(pi*m*t/T), m = 1..modes, so both signals vanish at the endpoints
    and the spectral content stays below modes/(2T). The same seed always
    reproduces the same grid bit for bit.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if not 1 <= modes <= 8:
        raise ValueError("modes must be between 1 and 8")
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=(2, modes))
    t = np.linspace(0.0, t_final, samples)
    basis = np.sin(np.pi * np.arange(1, modes + 1)[:, None] * t[None, :] / t_final)
    signals = amplitude * (coeffs @ basis) / np.sqrt(modes)
    return ControlGrid(0.0, t_final, signals)
