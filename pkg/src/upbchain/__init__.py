"""Photon statistics of driven-dissipative dimer chains.

Core objects: LatticeSpec describes the chain, weakdrive solves the
few-photon hierarchy, analytics carries the closed-form design rules,
master provides the full master-equation routes (dense steady state and
shifted-jump Monte Carlo), sweep maps the parameter plane, cli wraps it
all for the shell.
"""

from .analytics import (
    LeadingAmplitudes,
    OptimalPoint,
    alternating_gsum,
    double_factorial,
    g_coefficient,
    gsum_identity,
    leading_amplitudes,
    occupation_estimate,
    optimal_point,
    singularity_radius,
    upb_alpha,
)
from .lattice import (
    LatticeSpec,
    PoleError,
    SingleParticleSpectrum,
    build_hamiltonian,
    chiral_operator,
    chiral_signs,
    eigendecompose,
    gc_power_element,
    green_element,
    signal_site,
)
from .master import (
    FockSpec,
    G2TauSeries,
    IntegrationError,
    OperatorSet,
    SteadyStateSolution,
    TrajectoryConfig,
    TrajectoryStats,
    UndefinedG2Error,
    build_operators,
    g2_tau,
    jackknife,
    liouvillian_steady_state,
    wfmc_run,
)
from .sweep import (
    AlphaScanRecord,
    GridSpec,
    GridTooCoarseError,
    PhaseSingularity,
    ZMap,
    alpha_scan_records,
    find_phase_singularities,
    optimal_alpha_scan,
    z_grid_map,
)
from .weakdrive import (
    OnePhotonState,
    TwoPhotonState,
    UndefinedCorrelationError,
    WeakDriveSolution,
    g2_zero_delay,
    signal_amplitude,
    solve_one_photon,
    solve_two_photon_exact,
    solve_two_photon_perturbative,
    solve_weak_drive,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaScanRecord",
    "FockSpec",
    "G2TauSeries",
    "GridSpec",
    "GridTooCoarseError",
    "IntegrationError",
    "LatticeSpec",
    "LeadingAmplitudes",
    "OnePhotonState",
    "OperatorSet",
    "OptimalPoint",
    "PhaseSingularity",
    "PoleError",
    "SingleParticleSpectrum",
    "SteadyStateSolution",
    "TrajectoryConfig",
    "TrajectoryStats",
    "TwoPhotonState",
    "UndefinedCorrelationError",
    "UndefinedG2Error",
    "WeakDriveSolution",
    "ZMap",
    "alpha_scan_records",
    "alternating_gsum",
    "build_hamiltonian",
    "build_operators",
    "chiral_operator",
    "chiral_signs",
    "double_factorial",
    "eigendecompose",
    "find_phase_singularities",
    "g2_tau",
    "g2_zero_delay",
    "g_coefficient",
    "gc_power_element",
    "green_element",
    "gsum_identity",
    "jackknife",
    "leading_amplitudes",
    "liouvillian_steady_state",
    "occupation_estimate",
    "optimal_alpha_scan",
    "optimal_point",
    "signal_amplitude",
    "signal_site",
    "singularity_radius",
    "solve_one_photon",
    "solve_two_photon_exact",
    "solve_two_photon_perturbative",
    "solve_weak_drive",
    "upb_alpha",
    "wfmc_run",
    "z_grid_map",
]
