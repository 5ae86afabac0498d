"""liftcal: model-agnostic calibration from (response, prediction) pairs.

Fit the lifted linear model on held-out pairs, test whether a model's
(bias, scale) sits at (0, 1), emit fast point-wise prediction intervals
(Student-t or posterior-sampled for non-Gaussian errors), score and rank
models by loss ratios, and flag outliers with a soft-threshold block
coordinate descent.
"""

from .errors import (
    BoundaryNullError,
    DegenerateDesignError,
    InsufficientDataError,
    InsufficientSamplesError,
    InvalidInputError,
    InvalidParameterError,
    ModelUnsuitableError,
    NonConvergenceError,
    ShapeMismatchError,
    TuningFailureError,
    UndefinedLcdError,
)
from .intervals import (
    Interval,
    ReliabilityCurve,
    empirical_coverage,
    eta_hat,
    mspe_bound_estimate,
    prediction_interval,
    prediction_intervals,
    reliability_curve,
)
from .lcd import (
    GlmFit,
    LcdReport,
    Link,
    MicScore,
    NullKind,
    committee_predict,
    exp_loss_lcd,
    fit_lifted_glm,
    lcd,
    mic,
    mic_probabilities,
    null_loss,
    rank_models,
    raw_model_loss,
)
from .lifted import CalibrationSet, ConsistencyTest, LiftedFit, consistency_test, fit_lifted_linear, residuals
from .mcmc import McmcConfig, PosteriorChain, chain_diagnostics, log_posterior, predictive_interval_mcmc, sample_posterior
from .outliers import (
    OutlierSolution,
    WaveletDetail,
    detect_outliers,
    haar_dwt,
    haar_idwt,
    lambda_max,
    mad_sigma,
    select_lambda,
    soft_threshold,
)
from .stats import (
    BivariateTQuantile,
    NoiseFamily,
    Seed,
    as_seed,
    bivariate_t_linf_quantile,
    noise_logpdf,
    noise_sample,
    normal_quantile,
    t_cdf,
    t_quantile,
)
from .synth import (
    SynthConfig,
    SynthDataset,
    baseline_predict,
    damped_cosine,
    doppler,
    gen_dataset,
    inject_outliers,
    path_values,
    three_way_split,
)

__version__ = "0.1.0"
