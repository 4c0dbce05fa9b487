"""Simulation and quartic-variation inference for the stochastic heat equation
driven by multiplicative space-time white noise over a two-material medium.

The medium has piecewise-constant diffusivity and density with a single
interface at the origin.  The package evaluates the explicit fundamental
solution of the associated divergence-form heat operator, simulates the mild
solution by discretized stochastic convolution, samples exact Gaussian paths
in the linear case, and computes temporal quartic variations together with
the plug-in estimator of the local diffusivity.
"""

__version__ = "0.1.0"

from .medium import MediumParams, DerivedConstants, derive_constants, position_map, tau, A_of, rho_of
from .kernel import GreenKernel, BoundConstants
from .noise import GridSpec, NoiseField, build_grid, sample_noise
from .solver import (
    SigmaSpec,
    SolutionField,
    SolutionPath,
    NonFiniteFieldError,
    sigma_one,
    sigma_affine,
    sigma_sin,
    parse_sigma,
    solve_field,
    covariance_linear,
    covariance_matrix,
    solve_linear_exact,
    ExactLinearSampler,
)
from .stats import (
    VariationReport,
    AveragedReport,
    Moments,
    DegeneratePathError,
    quartic_variation,
    limit_functional,
    estimate_A,
    averaged_variation,
    averaged_variation_from_paths,
    moment_summary,
)

__all__ = [
    "__version__",
    "MediumParams",
    "DerivedConstants",
    "derive_constants",
    "position_map",
    "tau",
    "A_of",
    "rho_of",
    "GreenKernel",
    "BoundConstants",
    "GridSpec",
    "NoiseField",
    "build_grid",
    "sample_noise",
    "SigmaSpec",
    "SolutionField",
    "SolutionPath",
    "NonFiniteFieldError",
    "sigma_one",
    "sigma_affine",
    "sigma_sin",
    "parse_sigma",
    "solve_field",
    "covariance_linear",
    "covariance_matrix",
    "solve_linear_exact",
    "ExactLinearSampler",
    "VariationReport",
    "AveragedReport",
    "Moments",
    "DegeneratePathError",
    "quartic_variation",
    "limit_functional",
    "estimate_A",
    "averaged_variation",
    "averaged_variation_from_paths",
    "moment_summary",
]
