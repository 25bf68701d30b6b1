"""Feynman-Kac Monte Carlo, PIDE oracles and semiclassical asymptotics for Lévy processes."""

from .asymptotics import (
    ExpansionReport,
    drift_prediction_config,
    drift_prediction_momentum,
    gaussian_k0,
    gaussian_k1bar,
    hbar_sweep,
    jump_prefactor_mc,
    prefactor_F,
    prefactor_mc,
    predicted_prefactor,
    quadratic_functional_mc,
    riccati_prefactor,
)
from .errors import (
    AdmissibilityWarning,
    BoundaryTruncationWarning,
    ConfigError,
    DegenerateError,
    LevyFKError,
    RangeError,
    ResolutionError,
    SolverError,
)
from .fk_engine import MCEstimate, MCParams, drift_estimate, fk_estimate, fk_estimate_many, semigroup_residual
from .levy_core import (
    FiniteAtomic,
    GammaDensity,
    LevyModel,
    TwoPoint,
    analytic_moment,
    apply_generator,
    characteristic_exponent,
    empirical_moments,
    generator_matrix,
    sample_path,
    simulate_paths,
)
from .pide import GridSolution, auto_grid, refine_order, solve_pide, solve_pide_scaled
from .problem import BoundaryData, ProblemSpec, RateFunction
from .variational import (
    BoundaryTerm,
    Hamiltonian,
    Lagrangian,
    MinimizerResult,
    action_value,
    el_residual,
    hamiltonian_h0,
    harmonic_closed_form,
    legendre_l0,
    probe_local_minimality,
    solve_el,
    solve_el_config,
    solve_el_jump,
    solve_el_momentum,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityWarning",
    "BoundaryData",
    "BoundaryTerm",
    "BoundaryTruncationWarning",
    "ConfigError",
    "DegenerateError",
    "ExpansionReport",
    "FiniteAtomic",
    "GammaDensity",
    "GridSolution",
    "Hamiltonian",
    "Lagrangian",
    "LevyFKError",
    "LevyModel",
    "MCEstimate",
    "MCParams",
    "MinimizerResult",
    "ProblemSpec",
    "RangeError",
    "RateFunction",
    "ResolutionError",
    "SolverError",
    "TwoPoint",
    "action_value",
    "analytic_moment",
    "apply_generator",
    "auto_grid",
    "characteristic_exponent",
    "drift_estimate",
    "drift_prediction_config",
    "drift_prediction_momentum",
    "el_residual",
    "empirical_moments",
    "fk_estimate",
    "fk_estimate_many",
    "gaussian_k0",
    "gaussian_k1bar",
    "generator_matrix",
    "hamiltonian_h0",
    "harmonic_closed_form",
    "hbar_sweep",
    "jump_prefactor_mc",
    "legendre_l0",
    "predicted_prefactor",
    "prefactor_F",
    "prefactor_mc",
    "probe_local_minimality",
    "quadratic_functional_mc",
    "refine_order",
    "riccati_prefactor",
    "sample_path",
    "semigroup_residual",
    "simulate_paths",
    "solve_el",
    "solve_el_config",
    "solve_el_jump",
    "solve_el_momentum",
    "solve_pide",
    "solve_pide_scaled",
]
