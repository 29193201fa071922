"""Radial solutions of Henon-weighted Pucci equations in annuli and exterior domains.

Shooting solvers for the radial problem, the associated quadratic planar
system in ``(x, z)``, weighted energies and a command-line front end.
"""
from .energy import big_energy, energy_samples, monotonicity_audit, small_energy
from .ivp import (
    IntegrationError,
    IntegratorConfig,
    ShootingInput,
    SolutionProfile,
    StepLimitExceeded,
    StiffnessFailure,
    integrate_ivp,
    rescale_profile,
    residual_audit,
)
from .kernels import BACKEND
from .phase import (
    Classification,
    PhaseConfig,
    PhasePoint,
    PhaseTrajectory,
    StationaryPoint,
    from_phase,
    geometry,
    poincare_return,
    stable_manifold_A0,
    stationary_points,
    to_phase,
    unstable_manifold_O,
    vector_field,
)
from .pucci import (
    DerivedExponents,
    InvalidParameters,
    OperatorVariant,
    ProblemParams,
    derive_exponents,
    m_pm,
    M_pm,
    pucci_eval,
    radial_rhs,
)
from .shooting import (
    AnnulusRequest,
    DecayClass,
    ExteriorRequest,
    SolveReport,
    classify_decay,
    explore_D,
    find_fast_decay_delta,
    rho_of_delta,
    solve_annulus,
    solve_negative,
)

__version__ = "0.1.0"

__all__ = [
    "AnnulusRequest", "BACKEND", "Classification", "DecayClass", "DerivedExponents",
    "ExteriorRequest", "IntegrationError", "IntegratorConfig", "InvalidParameters", "M_pm",
    "OperatorVariant", "PhaseConfig", "PhasePoint", "PhaseTrajectory", "ProblemParams",
    "ShootingInput", "SolutionProfile", "SolveReport", "StationaryPoint", "StepLimitExceeded",
    "StiffnessFailure", "big_energy", "classify_decay", "derive_exponents", "energy_samples",
    "explore_D", "find_fast_decay_delta", "from_phase", "geometry", "integrate_ivp", "m_pm",
    "monotonicity_audit", "poincare_return", "pucci_eval", "radial_rhs", "rescale_profile",
    "residual_audit", "rho_of_delta", "small_energy", "solve_annulus", "solve_negative",
    "stable_manifold_A0", "stationary_points", "to_phase", "unstable_manifold_O", "vector_field",
]
