"""Nonlinear filtering for diffusions steered by bounded-variation input.

The signal is a diffusion plus a finite-fuel bounded-variation path nu;
observations carry the signal through a drift term under multiplicative
noise scaling.  The package provides path simulation under the physical
and reference measures, a grid solver for the unnormalized (and
normalized) filtering densities with exact jump resets, a bootstrap
particle filter with mass bookkeeping, a Kalman oracle for
linear-Gaussian scenarios, Gaussian smoothing operators with their
identity suite, and a CLI for reproducible experiments.
"""

from .bvpath import BVPath, bv_increment, bv_total_variation
from .errors import (
    CflError,
    FilterCollapseError,
    GridMismatchError,
    ScenarioValidationError,
    SimulationError,
)
from .fields import DensityField, density_cov, density_mean
from .fileio import (
    compare_estimates,
    read_csv,
    read_density_bin,
    write_csv,
    write_density_bin,
    write_estimate_csv,
    write_json,
)
from .grids import SpatialGrid, TimeGrid
from .mollify import (
    DiscreteMeasure,
    heat_kernel,
    l2_norm,
    semigroup_residual,
    t_eps_function,
    t_eps_function_at,
    t_eps_measure,
    tprop_suite,
)
from .oracle import GaussianBelief, kalman_jump_identity_check, kalman_run
from .particle import ParticleCloud, pf_estimate, pf_init, pf_resample, pf_step, run_pf
from .results import EstimateSeries
from .scenario import (
    ConstantDiffusion,
    ConstantGamma,
    CubicClipDrift,
    GaussianMixture,
    GridDensity,
    LinearDrift,
    LinearObservation,
    Scenario,
    TanhObservation,
    ValidationReport,
    Violation,
    scenario_from_config,
    validate_scenario,
    zero_drift,
    zero_observation,
)
from .simulate import (
    PathBundle,
    RngStream,
    girsanov_log_density,
    sample_bundle,
    simulate_observation_physical,
    simulate_observation_reference,
    simulate_signal,
)
from .zakai import (
    GeneratorStencil,
    fokker_planck_step,
    generator_apply,
    initial_density,
    jump_reset,
    mass_formula_check,
    observation_step,
    run_ks,
    run_zakai,
    shift_density,
    transport_step,
    zakai_step,
)

__version__ = "0.1.0"

__all__ = [
    "BVPath",
    "bv_increment",
    "bv_total_variation",
    "CflError",
    "FilterCollapseError",
    "GridMismatchError",
    "ScenarioValidationError",
    "SimulationError",
    "DensityField",
    "density_cov",
    "density_mean",
    "compare_estimates",
    "read_csv",
    "read_density_bin",
    "write_csv",
    "write_density_bin",
    "write_estimate_csv",
    "write_json",
    "SpatialGrid",
    "TimeGrid",
    "DiscreteMeasure",
    "heat_kernel",
    "l2_norm",
    "semigroup_residual",
    "t_eps_function",
    "t_eps_function_at",
    "t_eps_measure",
    "tprop_suite",
    "GaussianBelief",
    "kalman_jump_identity_check",
    "kalman_run",
    "ParticleCloud",
    "pf_estimate",
    "pf_init",
    "pf_resample",
    "pf_step",
    "run_pf",
    "EstimateSeries",
    "ConstantDiffusion",
    "ConstantGamma",
    "CubicClipDrift",
    "GaussianMixture",
    "GridDensity",
    "LinearDrift",
    "LinearObservation",
    "Scenario",
    "TanhObservation",
    "ValidationReport",
    "Violation",
    "scenario_from_config",
    "validate_scenario",
    "zero_drift",
    "zero_observation",
    "PathBundle",
    "RngStream",
    "girsanov_log_density",
    "sample_bundle",
    "simulate_observation_physical",
    "simulate_observation_reference",
    "simulate_signal",
    "GeneratorStencil",
    "fokker_planck_step",
    "generator_apply",
    "initial_density",
    "jump_reset",
    "mass_formula_check",
    "observation_step",
    "run_ks",
    "run_zakai",
    "shift_density",
    "transport_step",
    "zakai_step",
    "__version__",
]
