"""Frequency-domain isotropy testing for irregularly sampled random fields.

The package simulates stationary Gaussian fields observed at uniformly
random locations in a square, forms tapered spatial discrete Fourier
transforms on a shifted frequency grid, and compares two estimators of the
integrated squared spectral density — one unrestricted, one computed
through an isotropized (Bessel-averaged) covariance — to test whether the
field is isotropic.  Population-level quadrature oracles, a seeded Monte
Carlo harness, and a small CLI sit on top.
"""

__version__ = "0.1.0"

from .errors import (
    AnisospecError,
    ConfigurationError,
    DataIOError,
    DegenerateVarianceError,
    NumericalError,
)
from .estimators import (
    TestConfig,
    TestResult,
    c0_hat,
    d1_efficient,
    d2_efficient,
    f4_hat,
    isotropy_test,
    tau_h0_biascorrected,
    tau_h0_plain,
)
from .fields import (
    CovarianceModel,
    GaussianAniso,
    Matern,
    Seed,
    SpatialSample,
    covariance_eval,
    sample_locations,
    simulate_field,
    spectral_density,
)
from .harness import (
    ExperimentConfig,
    MonteCarloRow,
    parse_config,
    run_montecarlo,
    run_single,
    serialize_config,
)
from .lfunctions import LFunctionParams, ell_function, l_function
from .population import (
    QuadratureSpec,
    TauLimits,
    population_d1,
    population_d2,
    population_f4,
    population_m2,
    population_tau_limits,
)
from .spectral import FrequencyGrid, tapered_periodogram, weighted_dft
from .windows import CosinePower, Rectangular, frequency_window, h_coefficient

__all__ = [
    "AnisospecError",
    "ConfigurationError",
    "CosinePower",
    "CovarianceModel",
    "DataIOError",
    "DegenerateVarianceError",
    "ExperimentConfig",
    "FrequencyGrid",
    "GaussianAniso",
    "LFunctionParams",
    "Matern",
    "MonteCarloRow",
    "NumericalError",
    "QuadratureSpec",
    "Rectangular",
    "Seed",
    "SpatialSample",
    "TauLimits",
    "TestConfig",
    "TestResult",
    "c0_hat",
    "covariance_eval",
    "d1_efficient",
    "d2_efficient",
    "ell_function",
    "f4_hat",
    "frequency_window",
    "h_coefficient",
    "isotropy_test",
    "l_function",
    "parse_config",
    "population_d1",
    "population_d2",
    "population_f4",
    "population_m2",
    "population_tau_limits",
    "run_montecarlo",
    "run_single",
    "sample_locations",
    "serialize_config",
    "simulate_field",
    "spectral_density",
    "tapered_periodogram",
    "tau_h0_biascorrected",
    "tau_h0_plain",
    "weighted_dft",
    "__version__",
]
