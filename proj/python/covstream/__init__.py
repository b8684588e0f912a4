"""Sequential detection of covariance changes in high-dimensional streams.

Observations are passed as NumPy arrays with one row per time point.
"""

from ._covstream import (
    ConfigError,
    DependenceTooStrongError,
    Detector,
    Error,
    InfeasibleError,
    InputError,
    InsufficientTrainingError,
    NumericalError,
    PreconditionError,
    StateError,
    TrainingSummary,
    edd_upper_bound,
    fit_training,
    gen_stream,
    localize,
    monte_carlo,
    population_null_sd,
    profile_curve,
    run_length_cdf,
    set_warning_handler,
    solve_threshold,
    statistic,
    theoretical_arl,
    weight_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
