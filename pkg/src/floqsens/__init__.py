"""Floquet-spectroscopy toolkit for dynamical-decoupling quantum sensing."""

from .engine import (
    ConditionalHamiltonians,
    EnvelopeTerms,
    FloquetPair,
    PulseSequence,
    SpectrumScan,
    coherence_floquet,
    coherence_numeric,
    envelope_general,
    floquet_pair,
    half_period_check,
    half_period_operators,
    spectrum_scan,
    thermal_coherence_numeric,
    unit_cell,
)
from .errors import (
    CapacityError,
    ConfigError,
    NumericalConsistencyError,
    SymmetryViolationError,
    TrackingError,
    ValidationError,
)
from .linalg import EigenSystem, eig_unitary, expm_hermitian, kron, spin_operators
from .pseudospin import (
    DipRecord,
    PseudoField,
    Regime,
    TwoStateModel,
    avg_hamiltonian_dip,
    coherence_analytic,
    cos_floquet_phase,
    diamond_boundaries,
    dip_depth,
    dip_positions,
    envelope,
    floquet_phase,
    omega_average,
    regime_classify,
)
from .clusters import (
    DipEstimate,
    PairSet,
    SpinCluster,
    basis_state_coherences,
    conditional_cluster_hamiltonians,
    doublet_dip_estimates,
    independent_pairs_coherence,
    joint_full_model,
    secular_quasienergies,
    thermal_coherence,
)
from .sensors import (
    DonorModel,
    NVModel,
    PairTarget,
    donor_hamiltonian,
    donor_pair_two_state,
    donor_polarization,
    nv_two_state,
    owp_locate,
    polarization_sweep,
    si_bi,
)

__version__ = "0.1.0"
