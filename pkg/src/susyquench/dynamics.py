"""Time-dependent overlap matrices, survival probability, and revival diagnostics.

Central object: the retained K x K block of

    O_kl(t) = sum_m U[k,m] U[l,m] exp(-i (E_from[l] - E_to[m]) t),

whose leading N x N determinant gives the zero-temperature survival
probability F = |det|^2, and whose Fermi-weighted determinant gives the
finite-temperature one. All spectra are integer multiples of E1, so every
F is exactly periodic with the revival time t_r = 2 pi / E1 = 4 L^2 / pi.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import DEFAULT_ALPHA_MAX, HierarchyBasis
from .errors import NumericalError
from .overlaps import (DEFAULT_DEFECT_TOLERANCE, DEFAULT_M_CAP,
                       adaptive_overlap_matrix)

__all__ = [
    "QuenchSpec",
    "EvolutionSnapshot",
    "ThermalState",
    "revival_time",
    "single_particle_phases",
    "evolution_matrix",
    "survival_probability_zero_T",
    "solve_chemical_potential",
    "thermal_state",
    "survival_probability_finite_T",
    "phase_diagnostics",
    "survival_sweep",
    "default_time_grid",
    "quench_overlaps",
    "work_link_slope",
]

TOL_ZERO_T = 1e-6
TOL_FINITE_T = 1e-4
OCCUPATION_CUT = 1e-12


@dataclass(frozen=True)
class QuenchSpec:
    """A sudden switch between hierarchy levels for N fermions in one box."""

    geom: object
    to_level: int
    N: int
    from_level: int = 1
    K: int = 0          # retained initial states; 0 means "use N"
    M: int = 0          # final-basis truncation; 0 means "choose adaptively"
    alpha_max: int = DEFAULT_ALPHA_MAX

    def __post_init__(self):
        if not (1 <= self.from_level < self.to_level <= self.alpha_max):
            raise ValueError(
                f"need 1 <= from_level < to_level <= {self.alpha_max}, "
                f"got {self.from_level} -> {self.to_level}"
            )
        if self.N < 1:
            raise ValueError(f"particle number must be >= 1, got {self.N}")
        if self.K and self.K < self.N:
            raise ValueError(f"retained rows K={self.K} must cover the Fermi sea N={self.N}")

    @property
    def rows(self):
        return self.K if self.K else self.N


@dataclass(frozen=True)
class EvolutionSnapshot:
    t: float
    F: float
    log_F: float
    diag_phases: np.ndarray = field(repr=False)   # complex diagonal entries O_kk
    max_offdiag: float = 0.0
    classification: str = "none"
    O: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class ThermalState:
    beta: float
    mu: float
    occupations: np.ndarray = field(repr=False)
    T_over_TF: float = 0.0


def revival_time(geom):
    """4 L^2 / pi, equal to 2 pi / E1."""
    return 4.0 * geom.L**2 / math.pi


def single_particle_phases(t, geom, n_max):
    """Accumulated phases mod 2 pi, split by parity, n = 0..n_max-1.

    Even-parity box states carry odd indices 2n+1, odd-parity states even
    indices 2n+2, giving 2 pi (2n+1)^2 t/t_r and 8 pi (n+1)^2 t/t_r.
    """
    tr = revival_time(geom)
    n = np.arange(int(n_max))
    even = np.mod(2.0 * math.pi * (2 * n + 1) ** 2 * t / tr, 2.0 * math.pi)
    odd = np.mod(8.0 * math.pi * (n + 1) ** 2 * t / tr, 2.0 * math.pi)
    return even, odd


def _entries_of(U):
    return U.entries if hasattr(U, "entries") else np.asarray(U)


def evolution_matrix(U, E_from, E_to, t):
    """O_kl(t) = sum_m U[k,m] U[l,m] exp(-i (E_from[l] - E_to[m]) t)."""
    ent = _entries_of(U)
    E_from = np.asarray(E_from, dtype=float)
    E_to = np.asarray(E_to, dtype=float)
    if ent.shape != (E_from.size, E_to.size):
        raise ValueError(
            f"overlap block {ent.shape} does not match energy vectors "
            f"({E_from.size}, {E_to.size})"
        )
    O = (ent * np.exp(1j * E_to * t)[None, :]) @ ent.T
    O *= np.exp(-1j * E_from * t)[None, :]
    return O


def _abs_det_sq(block):
    sign, logabs = np.linalg.slogdet(block)
    if not np.isfinite(logabs):
        raise NumericalError("determinant underflow/overflow: non-finite log|det|")
    return abs(sign) ** 2 * math.exp(2.0 * logabs), 2.0 * logabs


def survival_probability_zero_T(O, N):
    """|det of the leading N x N block|^2."""
    O = np.asarray(O)
    if N > O.shape[0]:
        raise ValueError(f"N={N} exceeds retained block size {O.shape[0]}")
    if not np.all(np.isfinite(O)):
        raise NumericalError("non-finite entries in evolution matrix")
    F, _ = _abs_det_sq(O[:N, :N])
    return F


def solve_chemical_potential(E, beta, N, tol=1e-10, max_iter=200):
    """mu with sum_k occupations = N, by bisection on a guaranteed bracket."""
    E = np.asarray(E, dtype=float)
    if beta <= 0:
        raise ValueError("beta must be positive")

    def total(mu):
        return float(np.sum(_fermi(E, beta, mu)))

    lo, hi = E[0] - 50.0 / beta, E[-1] + 50.0 / beta
    if not (total(lo) <= N <= total(hi)):
        raise NumericalError(
            f"chemical-potential bracket failed for N={N}: "
            f"[{total(lo):.3e}, {total(hi):.3e}]; increase the mode count"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        t_mid = total(mid)
        if abs(t_mid - N) < 0.1 * tol:
            return mid          # converged in value; the bracket may still be wide
        if t_mid < N:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    mu = 0.5 * (lo + hi)
    if abs(total(mu) - N) > tol:
        raise NumericalError(f"bisection left |sum n - N| = {abs(total(mu) - N):.2e} > {tol:.0e}")
    return mu


def _fermi(E, beta, mu):
    return 1.0 / (np.exp(np.clip(beta * (np.asarray(E, dtype=float) - mu), -700.0, 700.0)) + 1.0)


def thermal_state(N, T_over_TF, geom, occupation_cut=OCCUPATION_CUT, m_start=None):
    """Occupations of the initial (bare box) gas at temperature T/T_F.

    T_F = N^2 E1. The retained mode count M_th is grown until the last
    occupation falls below occupation_cut.
    """
    if T_over_TF <= 0:
        raise ValueError("use the zero-temperature code path for T = 0")
    TF = N * N * geom.energy_unit
    beta = 1.0 / (T_over_TF * TF)
    m_th = int(m_start) if m_start else max(2 * N, N + 20)
    for _ in range(60):
        E = np.arange(1, m_th + 1, dtype=float) ** 2 * geom.energy_unit
        mu = solve_chemical_potential(E, beta, N)
        occ = _fermi(E, beta, mu)
        if occ[-1] < occupation_cut:
            return ThermalState(beta=beta, mu=mu, occupations=occ, T_over_TF=float(T_over_TF))
        m_th = int(1.5 * m_th) + 20
    raise NumericalError("thermal mode count did not converge")


def survival_probability_finite_T(U, E_from, E_to, thermal, t):
    """F = |det[(1 - n_k) delta_kl + n_k O_kl(t)]|^2 over the retained block.

    Occupations are evaluated from (beta, mu) for every retained row, so the
    block may be larger than the stored occupation vector.
    """
    O = evolution_matrix(U, E_from, E_to, t)
    K = O.shape[0]
    occ = _fermi(np.asarray(E_from, dtype=float), thermal.beta, thermal.mu)
    D = np.diag(1.0 - occ).astype(complex)
    D += occ[:, None] * O
    F, _ = _abs_det_sq(D)
    return F


def phase_diagnostics(O, N, tol=TOL_ZERO_T):
    """Leading diagonal entries, max off-diagonal magnitude, revival label.

    "true revival": all diagonal phases 0 mod 2pi and unit moduli (within tol);
    "quasi revival": unit moduli and vanishing off-diagonals, nonzero phases;
    "none": anything else.
    """
    O = np.asarray(O)
    block = O[:N, :N]
    diag = np.diag(block).copy()
    off = block - np.diag(np.diag(block))
    max_offdiag = float(np.max(np.abs(off))) if N > 1 else 0.0
    unit_moduli = bool(np.all(np.abs(np.abs(diag) - 1.0) < tol))
    phases_zero = bool(np.all(np.abs(diag - 1.0) < tol))
    if unit_moduli and max_offdiag < tol and phases_zero:
        label = "true revival"
    elif unit_moduli and max_offdiag < tol:
        label = "quasi revival"
    else:
        label = "none"
    return diag, max_offdiag, label


def default_time_grid(geom, t_max_over_tr=2.0, points=2000, include_quarters=True):
    """Uniform grid on [0, t_max] with exact quarter-revival instants inserted."""
    tr = revival_time(geom)
    t_max = t_max_over_tr * tr
    grid = np.linspace(0.0, t_max, int(points))
    if include_quarters:
        quarters = np.arange(0, math.floor(t_max / (tr / 4)) + 1) * (tr / 4)
        grid = np.unique(np.concatenate([grid, quarters]))
    return grid


def quench_overlaps(spec, basis=None, defect_tolerance=DEFAULT_DEFECT_TOLERANCE,
                    m_cap=DEFAULT_M_CAP, thermal=None, mass_tolerance=None):
    """Overlap matrix and energy vectors for a quench, truncation chosen adaptively.

    Returns (U, E_from, E_to). With a thermal state, rows cover
    max(M_th, N+10) and the truncation criterion is occupation-weighted
    (tolerance mass_tolerance, default 5e-6), which is what the 1e-4
    finite-temperature revival tolerance actually requires.
    """
    if basis is None:
        basis = HierarchyBasis(spec.geom, alpha_max=spec.alpha_max)
    if thermal is not None:
        K = max(spec.K, thermal.occupations.size, spec.N + 10)
        E_rows = np.arange(1, K + 1, dtype=float) ** 2 * spec.geom.energy_unit
        weights = _fermi(E_rows, thermal.beta, thermal.mu)
        if spec.M:
            from .overlaps import overlap_matrix
            U = overlap_matrix(basis, spec.from_level, spec.to_level, K, spec.M)
        else:
            U = adaptive_overlap_matrix(
                basis, spec.from_level, spec.to_level, K,
                defect_tolerance=defect_tolerance, m_cap=m_cap,
                row_weights=weights,
                mass_tolerance=mass_tolerance if mass_tolerance else 5e-6,
            )
    else:
        K = spec.rows
        if spec.M:
            from .overlaps import overlap_matrix
            U = overlap_matrix(basis, spec.from_level, spec.to_level, K, spec.M)
        else:
            U = adaptive_overlap_matrix(
                basis, spec.from_level, spec.to_level, K,
                defect_tolerance=defect_tolerance, m_cap=m_cap,
            )
    E_from = basis.energies(spec.from_level, U.K)
    E_to = basis.energies(spec.to_level, U.M)
    return U, E_from, E_to


def survival_sweep(spec, t_grid, thermal=None, U=None, E_from=None, E_to=None,
                   basis=None, tol=None, store_matrices=False,
                   defect_tolerance=DEFAULT_DEFECT_TOLERANCE, m_cap=DEFAULT_M_CAP):
    """Snapshots of (F, diagnostics) over a time grid.

    The O matrices are dropped from the snapshots unless store_matrices is
    set; at 2000 grid points they dominate memory otherwise.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if U is None:
        U, E_from, E_to = quench_overlaps(spec, basis=basis, thermal=thermal,
                                          defect_tolerance=defect_tolerance, m_cap=m_cap)
    if tol is None:
        tol = TOL_FINITE_T if thermal is not None else TOL_ZERO_T
    ent = _entries_of(U)
    occ = None
    if thermal is not None:
        occ = _fermi(np.asarray(E_from, dtype=float), thermal.beta, thermal.mu)
    snapshots = []
    for t in t_grid:
        O = evolution_matrix(ent, E_from, E_to, t)
        diag, max_off, label = phase_diagnostics(O, spec.N, tol)
        if occ is None:
            F, logdet2 = _abs_det_sq(O[: spec.N, : spec.N])
        else:
            D = np.diag(1.0 - occ).astype(complex) + occ[:, None] * O
            F, logdet2 = _abs_det_sq(D)
        snapshots.append(
            EvolutionSnapshot(
                t=float(t), F=F, log_F=logdet2,
                diag_phases=diag, max_offdiag=max_off, classification=label,
                O=O if store_matrices else None,
            )
        )
    return snapshots


def work_link_slope(U, E_from, E_to, N, step):
    """Central finite difference of the phase of det O_N(t) at t = 0.

    Equals the average work when the retained modes resolve times of order
    step; see work.finite_difference_work for a step chosen to a target
    accuracy. Positive sign convention: Im d/dt ln det O = +<W>.
    """
    Op = evolution_matrix(U, E_from, E_to, +step)[:N, :N]
    Om = evolution_matrix(U, E_from, E_to, -step)[:N, :N]
    sp, _ = np.linalg.slogdet(Op)
    sm, _ = np.linalg.slogdet(Om)
    return (np.angle(sp) - np.angle(sm)) / (2.0 * step)
