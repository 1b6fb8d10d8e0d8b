"""Nonsmooth glacial-cycle simulation.

A two-hemisphere energy balance model whose Northern Hemisphere ice sheet
switches between advancing and retreating regimes by a mass-balance
principle, producing an attracting sawtooth limit cycle.
"""
from .cycle import (
    CycleError,
    CycleMetrics,
    HalfMapResult,
    LimitCycle,
    R_points,
    contraction_estimate,
    cycle_metrics,
    find_limit_cycle,
    half_map,
    return_map,
)
from .equilibria import EquilibriumReport, classify_equilibrium, find_equilibria3, jacobian3, lift_to_4d
from .integrate import (
    BoundaryExitError,
    EventNotFoundError,
    IntegrationError,
    IntegratorConfig,
    StiffnessError,
    Trajectory,
    integrate,
    integrate_to_event,
)
from .legendre import (
    InsolationModel,
    insolation,
    insolation_coeffs,
    insolation_integral,
    legendre_antiderivative,
    legendre_eval,
)
from .model import (
    Branch,
    ClimateState3,
    ClimateState4,
    ConfigError,
    DerivedConstants,
    ModelParams,
    SpectralState,
    albedo_line_nullcline,
    derived_constants,
    mean_temp_nullcline,
    rhs3,
    rhs4,
    spectral_rhs,
    temperature_profile,
)
from .switching import (
    SigmaClass,
    classify_sigma_point,
    critical_ice_edge,
    epsilon_bound,
    mass_balance,
    normal_component,
    tangency_separation_ok,
    tangency_w,
)

__version__ = "0.1.0"
