"""Exact quench dynamics of a trapped ideal Fermi gas between partner potentials.

One spin-polarized gas in a box, suddenly handed a new Hamiltonian from the
supersymmetric hierarchy of that box (or a wider box, for contrast). All
many-body quantities reduce to determinants of single-particle overlap
blocks, which this package builds from closed forms where they exist and
from Gauss-Legendre quadrature everywhere else.
"""

__version__ = "0.1.0"

from .basis import (
    BoxGeometry,
    HierarchyBasis,
    HierarchyLevel,
    SingleParticleState,
    Superpotential,
    apply_annihilation,
    box_energy,
    box_wavefunction,
    hierarchy_energy,
    hierarchy_energy_shift,
    hierarchy_wavefunction,
    partner_potential,
    superpotential,
    wavefunction_derivatives,
)
from .config import RunConfig, load_config, parse_config
from .dynamics import (
    EvolutionSnapshot,
    QuenchSpec,
    ThermalState,
    default_time_grid,
    evolution_matrix,
    phase_diagnostics,
    quench_overlaps,
    revival_time,
    single_particle_phases,
    solve_chemical_potential,
    survival_probability_finite_T,
    survival_probability_zero_T,
    survival_sweep,
    thermal_state,
    work_link_slope,
)
from .errors import (
    CombinatorialCapError,
    ConfigError,
    NumericalError,
    SusyQuenchError,
    TruncationError,
)
from .overlaps import (
    OverlapMatrix,
    adaptive_overlap_matrix,
    completeness_defect_report,
    overlap_matrix,
)
from .quadrature import QuadratureRule, auto_order, build_quadrature, inner_product
from .talbot import ExpansionSpec, box_box_overlap, talbot_overlap_matrix, talbot_quench
from .work import (
    ExcitationRecord,
    WorkSpectrum,
    average_work,
    enumerate_final_states,
    fd_slope_from_profile,
    finite_difference_work,
    finite_difference_work_profile,
    ground_state_energy_shift,
    irreversible_work,
    many_body_overlap,
    spectrum_overlap_series,
    work_scan,
    wpd_finite_T,
)

__all__ = [
    "__version__",
    "BoxGeometry", "HierarchyBasis", "HierarchyLevel", "SingleParticleState",
    "Superpotential", "apply_annihilation", "box_energy", "box_wavefunction",
    "hierarchy_energy", "hierarchy_energy_shift", "hierarchy_wavefunction",
    "partner_potential", "superpotential", "wavefunction_derivatives",
    "RunConfig", "load_config", "parse_config",
    "EvolutionSnapshot", "QuenchSpec", "ThermalState", "default_time_grid",
    "evolution_matrix", "phase_diagnostics", "quench_overlaps", "revival_time",
    "single_particle_phases", "solve_chemical_potential",
    "survival_probability_finite_T", "survival_probability_zero_T",
    "survival_sweep", "thermal_state", "work_link_slope",
    "CombinatorialCapError", "ConfigError", "NumericalError",
    "SusyQuenchError", "TruncationError",
    "OverlapMatrix", "adaptive_overlap_matrix", "completeness_defect_report",
    "overlap_matrix",
    "QuadratureRule", "auto_order", "build_quadrature", "inner_product",
    "ExpansionSpec", "box_box_overlap", "talbot_overlap_matrix", "talbot_quench",
    "ExcitationRecord", "WorkSpectrum", "average_work", "enumerate_final_states",
    "fd_slope_from_profile", "finite_difference_work",
    "finite_difference_work_profile",
    "ground_state_energy_shift", "irreversible_work",
    "many_body_overlap", "spectrum_overlap_series", "work_scan", "wpd_finite_T",
]
