"""Estimation of Levy jump-measure distribution functions from increments.

The package provides two estimator families for the clipped distribution
function of a Levy measure and its tails, observed through n increments
at distance delta: a direct counting estimator and a spectral estimator
that inverts the empirical characteristic exponent through a band-limited
kernel. On top of the estimators sit uniform confidence bands driven by
the law of the running maximum of Brownian motion, a KS-type band test,
and a reproducible Monte Carlo harness for coverage and bias experiments.
"""

from .direct import EstimateCurve, direct_band_scale, direct_calN, direct_N
from .errors import ConfigurationError, EstimationError
from .harness import (
    BiasRow,
    ExperimentConfig,
    FigureData,
    default_t_grid,
    resolve_workers,
    run_bias_sweep,
    run_coverage,
    run_figure,
    truth_table,
)
from .inference import (
    BandResult,
    CoverageReport,
    KSTestResult,
    confidence_band,
    ks_test,
    max_abs_brownian_cdf,
    max_abs_brownian_quantile,
)
from .models import (
    ClipFunction,
    LevyModel,
    levy_density,
    nig_shape_params,
    parse_model,
    second_moment_nu,
    true_calN,
    true_N,
    true_N_curve,
)
from .simulate import IncrementSample, philox_generator, sample_increments
from .spectral import (
    SpectralConfig,
    SpectralDensity,
    build_u_grid,
    ecf_with_derivatives,
    flat_top_kernel_ft,
    psi_dd_hat,
    sigma2_hat,
    spectral_band_scale,
    spectral_calN,
    spectral_density_from_cf,
    spectral_density_on_grid,
    spectral_N,
    spectral_N_from_density,
)

__version__ = "0.1.0"

__all__ = [
    "BandResult",
    "BiasRow",
    "ClipFunction",
    "ConfigurationError",
    "CoverageReport",
    "EstimateCurve",
    "EstimationError",
    "ExperimentConfig",
    "FigureData",
    "IncrementSample",
    "KSTestResult",
    "LevyModel",
    "SpectralConfig",
    "SpectralDensity",
    "build_u_grid",
    "confidence_band",
    "default_t_grid",
    "direct_N",
    "direct_band_scale",
    "direct_calN",
    "ecf_with_derivatives",
    "flat_top_kernel_ft",
    "ks_test",
    "levy_density",
    "max_abs_brownian_cdf",
    "max_abs_brownian_quantile",
    "nig_shape_params",
    "parse_model",
    "philox_generator",
    "psi_dd_hat",
    "resolve_workers",
    "run_bias_sweep",
    "run_coverage",
    "run_figure",
    "sample_increments",
    "second_moment_nu",
    "sigma2_hat",
    "spectral_N",
    "spectral_N_from_density",
    "spectral_band_scale",
    "spectral_calN",
    "spectral_density_from_cf",
    "spectral_density_on_grid",
    "true_N",
    "true_N_curve",
    "true_calN",
    "truth_table",
]
