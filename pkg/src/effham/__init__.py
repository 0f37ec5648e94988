"""Effective Hamiltonian toolkit.

Two complementary techniques for reducing hard quantum problems to
tractable ones: iterative exact block-diagonalization through Givens
rotations (for time-independent operators with useful block structure) and
first-order coarse-grained time evolution (for rapidly driven systems),
plus builders for the circuit-QED style example models that exercise both.
"""

from .errors import (
    BenchMemoryError,
    ChainTooLarge,
    ConfigError,
    DimensionMismatch,
    EffHamError,
    GridMismatch,
    HermiticityViolation,
    IndexOutOfRange,
    NonFinite,
    NormDrift,
    OverlappingPairs,
    TruncationTooSmall,
    UnitarityDrift,
    ZeroCoupling,
)
from .expm import UnitaryPropagator, expm_batch, expm_unitary
from .magnus import (
    ControlGrid,
    ControlledHamiltonian,
    MagnusIntervalSet,
    StateVector,
    Trajectory,
    evolve,
    infidelity,
    load_control_grid,
    magnus_coefficients,
    magnus_intervals,
    assemble_effective_hams,
    save_control_grid,
    save_trajectory,
)
from .models import (
    DrivenQubitParams,
    JCSiteParams,
    SpinChainParams,
    driven_qubit_rotating_hamiltonian,
    jc_doublet_energies,
    jc_onsite_hamiltonian,
    jch_lattice_hamiltonian,
    ladder_test_hamiltonian,
    mott_lobe_boundary_analytic,
    mott_lobe_boundary_dense,
    mott_lobe_boundary_npad,
    spin_chain_hamiltonians,
    synthetic_transfer_pulse,
)
from .npad import (
    GivensRotation,
    NPADState,
    eliminate_coupling,
    eliminate_couplings,
    givens_rotation_matrix,
    npad_run,
    unitary_transformation,
)
from .operators import Coupling, HermitianOperator, load_matrix_market, save_matrix_market
from .reference import rk4_evolve

__version__ = "0.1.0"
