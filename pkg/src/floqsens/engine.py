"""General-dimension Floquet machinery for pulsed conditional evolution.

A CPMG unit cell alternates free evolution of the bath under two
conditional Hamiltonians H_u, H_d (selected by the sensor state).  With
pulse interval tau the cell propagators are

    T_u2 = T_u(tau) T_d(2 tau) T_u(tau),   T_d2 = T_d(tau) T_u(2 tau) T_d(tau),

where T_i(t) = exp(-i H_i t).  Both factor through the half-period
operators W_u = T_u(tau) T_d(tau) and W_d = T_d(tau) T_u(tau) as
T_u2 = W_u W_d and T_d2 = W_d W_u, which forces the two cells to share
one eigenphase multiset and makes each u-mode the half-period image of
its d-partner.  Finite pulse durations keep the same product structure
(see PulseSequence).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericalConsistencyError, SymmetryViolationError, ValidationError
from .linalg import (
    DEGENERACY_TOL,
    EigenSystem,
    eig_unitary,
    expm_hermitian,
    polar_unitary,
    require_hermitian,
    unitarity_defect,
)

PHASE_MATCH_TOL = 1e-8
HALF_PERIOD_TOL = 1e-8
POWER_DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class PulseSequence:
    """CPMG cell description: interval tau, n_p cell repetitions (2 n_p pulses).

    ``pulse_duration`` is the half-width delta of each finite pi pulse, so a
    cell lasts 4 (tau + pulse_duration).  Without an intra-pulse Hamiltonian
    the bath keeps evolving under its conditional Hamiltonian through the
    pulse window (flip taken at the pulse midpoint), which makes the cell
    identical to an ideal cell at interval tau + delta.  Supplying
    ``intra_pulse_hamiltonian`` instead inserts exp(-i H_pulse 2 delta) as
    the bath evolution during each pulse window; the pulse is still a pi
    flip of the sensor, the override only concerns the bath.
    """

    tau: float
    n_p: int
    pulse_duration: float = 0.0
    intra_pulse_hamiltonian: np.ndarray | None = None

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValidationError(f"pulse interval tau must be > 0, got {self.tau}")
        if int(self.n_p) != self.n_p or self.n_p < 0:
            raise ValidationError(f"n_p must be a non-negative integer, got {self.n_p}")
        if not np.isfinite(self.pulse_duration) or self.pulse_duration < 0:
            raise ValidationError(f"pulse_duration must be >= 0, got {self.pulse_duration}")
        if self.intra_pulse_hamiltonian is not None:
            require_hermitian(self.intra_pulse_hamiltonian, name="intra_pulse_hamiltonian")

    @property
    def total_time(self) -> float:
        return 4.0 * self.n_p * (self.tau + self.pulse_duration)

    def cell_segments(self, start: str = "u") -> list[tuple[str, float]]:
        """Ordered (label, duration) segments of one cell, first segment first.

        Labels are 'u'/'d' for conditional free evolution and 'pulse' for an
        explicit intra-pulse window.  Other periodic sequences can be added
        by generalizing this list without touching the propagator builders.
        """
        a, b = ("u", "d") if start == "u" else ("d", "u")
        if self.intra_pulse_hamiltonian is None:
            t_eff = self.tau + self.pulse_duration
            return [(a, t_eff), (b, 2 * t_eff), (a, t_eff)]
        w = 2 * self.pulse_duration
        return [(a, self.tau), ("pulse", w), (b, 2 * self.tau), ("pulse", w), (a, self.tau)]


@dataclass(frozen=True)
class ConditionalHamiltonians:
    """The pair of bath Hamiltonians selected by the sensor state (rad/s)."""

    h_u: np.ndarray
    h_d: np.ndarray

    def __post_init__(self):
        hu = require_hermitian(self.h_u, name="h_u")
        hd = require_hermitian(self.h_d, name="h_d")
        if hu.shape != hd.shape:
            raise ValidationError(f"conditional Hamiltonians disagree in shape: "
                                  f"{hu.shape} vs {hd.shape}")
        object.__setattr__(self, "h_u", hu)
        object.__setattr__(self, "h_d", hd)

    @property
    def dim(self) -> int:
        return self.h_u.shape[0]


def half_period_operators(ch: ConditionalHamiltonians,
                          seq: PulseSequence) -> tuple[np.ndarray, np.ndarray]:
    """(W_u, W_d) with cell propagators T_u2 = W_u W_d and T_d2 = W_d W_u."""
    if seq.intra_pulse_hamiltonian is None:
        t_eff = seq.tau + seq.pulse_duration
        a_u = expm_hermitian(ch.h_u, t_eff)
        a_d = expm_hermitian(ch.h_d, t_eff)
        return a_u @ a_d, a_d @ a_u
    if seq.intra_pulse_hamiltonian.shape != ch.h_u.shape:
        raise ValidationError("intra_pulse_hamiltonian dimension does not match the bath")
    a_u = expm_hermitian(ch.h_u, seq.tau)
    a_d = expm_hermitian(ch.h_d, seq.tau)
    t_pi = expm_hermitian(seq.intra_pulse_hamiltonian, 2 * seq.pulse_duration)
    return a_u @ t_pi @ a_d, a_d @ t_pi @ a_u


def unit_cell(ch: ConditionalHamiltonians,
              seq: PulseSequence) -> tuple[np.ndarray, np.ndarray]:
    """One-period propagators (T_u2, T_d2) of the CPMG cell."""
    w_u, w_d = half_period_operators(ch, seq)
    return w_u @ w_d, w_d @ w_u


def _circular_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise distance of phases a[i], b[j] on the circle."""
    diff = np.abs(a[:, None] - b[None, :]) % (2 * np.pi)
    return np.minimum(diff, 2 * np.pi - diff)


@dataclass(frozen=True)
class FloquetPair:
    """Matched eigen-systems of the two cell propagators.

    ``pairing[l]`` is the index of the d-mode sharing the phase of u-mode l;
    within a degenerate phase cluster the assignment maximizes the mode
    overlap.  ``overlaps[lp, l]`` is <Phi_d,lp | Phi_u,l>.
    """

    spectrum_u: EigenSystem
    spectrum_d: EigenSystem
    pairing: np.ndarray
    overlaps: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.spectrum_u.dim

    @property
    def phases(self) -> np.ndarray:
        return self.spectrum_u.phases


def floquet_pair(t_u2: np.ndarray, t_d2: np.ndarray,
                 phase_tol: float = PHASE_MATCH_TOL) -> FloquetPair:
    """Diagonalize both cells and match modes by phase, then by overlap.

    Raises SymmetryViolationError if the eigenphase multisets disagree by
    more than ``phase_tol`` on the unit circle (an invalid cell pair).
    """
    su = eig_unitary(t_u2)
    sd = eig_unitary(t_d2)
    overlaps = sd.modes.conj().T @ su.modes
    gaps = _circular_gap(su.phases, sd.phases)
    # Phase agreement dominates the assignment; |overlap| breaks degenerate ties.
    cost = gaps / max(phase_tol, 1e-300) - np.abs(overlaps.T)
    rows, cols = linear_sum_assignment(cost)
    pairing = np.empty(su.dim, dtype=int)
    pairing[rows] = cols
    matched = gaps[np.arange(su.dim), pairing]
    if matched.max() > phase_tol:
        raise SymmetryViolationError(
            f"u/d eigenphase multisets differ by {matched.max():.3e} > {phase_tol:.1e}")
    return FloquetPair(spectrum_u=su, spectrum_d=sd, pairing=pairing, overlaps=overlaps)


def half_period_check(ch: ConditionalHamiltonians, seq: PulseSequence,
                      pair: FloquetPair, tol: float = HALF_PERIOD_TOL,
                      degeneracy_tol: float = DEGENERACY_TOL) -> float:
    """Verify W_d maps each u-mode onto its paired d-mode (up to a phase).

    Returns the largest residual || W_d phi_u - e^{i mu} phi_d || over all
    modes.  Also checks that the two transfer phases of each mode pair add
    up to the cell eigenphase (mod 2 pi).  Modes inside a degenerate phase
    cluster are exempt from the per-mode residual (only the subspace is
    well-defined there).
    """
    w_u, w_d = half_period_operators(ch, seq)
    phases = pair.spectrum_u.phases
    worst = 0.0
    worst_isolated = 0.0
    for l in range(pair.dim):
        phi_u = pair.spectrum_u.modes[:, l]
        phi_d = pair.spectrum_d.modes[:, pair.pairing[l]]
        v = w_d @ phi_u
        amp_d = np.vdot(phi_d, v)
        residual = float(np.linalg.norm(v - (amp_d / max(abs(amp_d), 1e-300)) * phi_d))
        w = w_u @ phi_d
        amp_u = np.vdot(phi_u, w)
        mu_sum = -(np.angle(amp_d) + np.angle(amp_u))
        phase_err = np.abs(np.exp(1j * (mu_sum - phases[l])) - 1.0)
        gap = np.delete(_circular_gap(phases[l:l + 1], phases)[0], l)
        isolated = gap.min() > degeneracy_tol if pair.dim > 1 else True
        worst = max(worst, residual)
        if isolated:
            worst_isolated = max(worst_isolated, residual)
            if phase_err > tol:
                raise SymmetryViolationError(
                    f"half-period transfer phases of mode {l} miss the eigenphase "
                    f"by {phase_err:.3e}")
    if worst_isolated > tol:
        raise SymmetryViolationError(
            f"half-period residual {worst_isolated:.3e} > {tol:.1e} on an isolated mode")
    return worst


def unitary_power(u: np.ndarray, n: int) -> np.ndarray:
    """U^n by binary exponentiation, re-unitarized when roundoff accumulates."""
    if n < 0:
        raise ValidationError("negative powers are not used here")
    result = np.eye(u.shape[0], dtype=complex)
    base = u
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
            if unitarity_defect(base) > POWER_DRIFT_TOL:
                base = polar_unitary(base)
    return result


def coherence_numeric(ch: ConditionalHamiltonians, seq: PulseSequence,
                      initial_state: np.ndarray) -> complex:
    """Overlap of the two conditionally evolved bath branches, <B_u|B_d>."""
    b0 = np.asarray(initial_state, dtype=complex).ravel()
    if b0.shape[0] != ch.dim:
        raise ValidationError(f"initial state length {b0.shape[0]} != bath dim {ch.dim}")
    norm = np.linalg.norm(b0)
    if abs(norm - 1.0) > 1e-10:
        raise ValidationError(f"initial state must be unit norm, got {norm}")
    t_u2, t_d2 = unit_cell(ch, seq)
    b_u = unitary_power(t_u2, seq.n_p) @ b0
    b_d = unitary_power(t_d2, seq.n_p) @ b0
    val = complex(np.vdot(b_u, b_d))
    if abs(val) > 1.0 + 1e-8:
        raise NumericalConsistencyError(f"coherence magnitude drifted to {abs(val)}")
    return val


def thermal_coherence_numeric(ch: ConditionalHamiltonians, seq: PulseSequence) -> float:
    """Infinite-temperature bath average, (1/D) Re tr[(T_u2^n)^dag T_d2^n]."""
    t_u2, t_d2 = unit_cell(ch, seq)
    p_u = unitary_power(t_u2, seq.n_p)
    p_d = unitary_power(t_d2, seq.n_p)
    return float(np.trace(p_u.conj().T @ p_d).real) / ch.dim


def coherence_floquet(pair: FloquetPair, n_p: int,
                      imag_tol: float | None = None) -> float:
    """Bath-averaged coherence from phases and mode overlaps alone.

    <L> = (1/D) sum_{l,l'} e^{i n_p (E_l - E_l')} |<Phi_d,l'|Phi_u,l>|^2,
    returned as the real part.  The imaginary part vanishes identically
    only for D = 2; for larger baths it is merely small at weak coupling,
    so the consistency check is opt-in: pass ``imag_tol`` to enforce it.
    """
    phase_factors = np.exp(1j * n_p * pair.spectrum_u.phases)
    weights = np.abs(pair.overlaps) ** 2
    val = complex(phase_factors.conj() @ (weights @ phase_factors)) / pair.dim
    if imag_tol is not None and abs(val.imag) > imag_tol:
        raise NumericalConsistencyError(
            f"imaginary coherence residue {abs(val.imag):.3e} > {imag_tol:.1e}")
    return float(val.real)


@dataclass(frozen=True)
class EnvelopeTerms:
    """Pairwise decomposition <L> = 1 - sum_k coeff_k sin^2(n_p gap_k / 2).

    One term per unordered mode pair (l, l'); ``coefficients`` already carry
    the 2/D bath-average weight so that ``reconstruct`` reproduces the
    phase-overlap coherence exactly.  ``floor`` (1 - sum of coefficients) is
    the pulse-number-independent lower bound of the coherence.
    """

    index_pairs: np.ndarray
    coefficients: np.ndarray
    phase_gaps: np.ndarray

    @property
    def floor(self) -> float:
        return 1.0 - float(self.coefficients.sum())

    def reconstruct(self, n_p: int) -> float:
        osc = np.sin(n_p * self.phase_gaps / 2.0) ** 2
        return 1.0 - float(self.coefficients @ osc)


def envelope_general(pair: FloquetPair) -> EnvelopeTerms:
    """Pulse-number-independent envelope terms of a Floquet pair."""
    d = pair.dim
    weights = np.abs(pair.overlaps) ** 2
    idx_l, idx_lp = np.triu_indices(d, k=1)
    coeff = (weights[idx_lp, idx_l] + weights[idx_l, idx_lp]) * (2.0 / d)
    gaps = pair.spectrum_u.phases[idx_l] - pair.spectrum_u.phases[idx_lp]
    return EnvelopeTerms(index_pairs=np.stack([idx_l, idx_lp], axis=1),
                         coefficients=coeff, phase_gaps=gaps)


@dataclass(frozen=True)
class SpectrumScan:
    """Continuity-ordered eigenphase trajectories over a pulse-interval grid."""

    taus: np.ndarray
    phases: np.ndarray       # shape (n_tau, D), column = one trajectory
    crossings: np.ndarray    # bool per tau: some pair gap below threshold
    min_gaps: np.ndarray


def spectrum_scan(ch: ConditionalHamiltonians, tau_grid: np.ndarray,
                  pulse_duration: float = 0.0,
                  intra_pulse_hamiltonian: np.ndarray | None = None,
                  gap_threshold: float = 1e-2) -> SpectrumScan:
    """Track cell eigenphases along ascending tau, keeping trajectories smooth.

    At each step the new modes are matched to the previous ones by maximal
    overlap, so a column follows one Floquet state through avoided
    crossings instead of jumping at each phase sort.
    """
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or taus.size < 1 or np.any(np.diff(taus) <= 0):
        raise ValidationError("tau grid must be one-dimensional and strictly ascending")
    d = ch.dim
    phases = np.empty((taus.size, d))
    min_gaps = np.empty(taus.size)
    prev_modes = None
    order = np.arange(d)
    for i, tau in enumerate(taus):
        seq = PulseSequence(tau=tau, n_p=1, pulse_duration=pulse_duration,
                            intra_pulse_hamiltonian=intra_pulse_hamiltonian)
        t_u2, _ = unit_cell(ch, seq)
        spec = eig_unitary(t_u2)
        if prev_modes is not None:
            affinity = np.abs(prev_modes.conj().T @ spec.modes)
            rows, cols = linear_sum_assignment(-affinity)
            order = np.empty(d, dtype=int)
            order[rows] = cols
        phases[i] = spec.phases[order]
        prev_modes = spec.modes[:, order]
        gap = _circular_gap(spec.phases, spec.phases)
        np.fill_diagonal(gap, np.inf)
        min_gaps[i] = gap.min() if d > 1 else np.inf
    return SpectrumScan(taus=taus, phases=phases,
                        crossings=min_gaps < gap_threshold, min_gaps=min_gaps)
