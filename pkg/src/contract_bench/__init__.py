"""Posterior contraction experiments for linear inverse problems in sequence space."""
from .errors import ConfigurationError, InjectivityError, NumericalError, SamplingError
from .spectral_core import (
    BasisMap,
    IllPosedness,
    Observation,
    SequenceVector,
    SpectralOperator,
    delta_sequence,
    ill_posedness_delta,
    make_operator,
    operator_weak_norm,
    simulate_observation,
    sobolev_norm,
)
from .priors import (
    CoefficientDensity,
    GaussianPriorSpec,
    RadiusPmf,
    ScaleSchedule,
    SievePriorSpec,
    TruncationPmf,
    WaveletPriorSpec,
    prior_from_dict,
    sample_gaussian_prior,
    sample_sieve_prior,
    sample_wavelet_prior,
)
from .posterior import (
    ConjugatePosterior,
    MCMCConfig,
    PosteriorChain,
    conjugate_posterior,
    contraction_radius,
    load_chain,
    posterior_mass_outside,
    rjmcmc_sieve_posterior,
    save_chain,
    wavelet_posterior_mcmc,
)
from .frequentist_tests import (
    borell_exceedance,
    borell_tail_bound,
    calibrate_threshold,
    dual_functional,
    estimate_test_errors,
    plugin_estimator,
    plugin_test,
)
from .wavelets import (
    WaveletCoefficients,
    besov_norm,
    meyer_basis_map,
    meyer_fourier_coefficients,
    wavelet_analysis,
    wavelet_synthesis,
)
from .smallball import (
    approximation_term,
    centered_smallball_lower_bound,
    concentration_function,
    entropy_constant,
    rectangle_cover,
    rkhs_cover_count,
    smallball_mc,
    weighted_chisq_cdf,
)
from .rate_harness import RateFit, RateScenario, RateTable, fit_rate, run_experiment, theoretical_rate

__version__ = "0.1.0"
