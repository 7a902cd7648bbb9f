"""Super-resolved estimation of the separation of two Gaussian spectral lines
from Hermite-Gauss mode-demultiplexed photon counts.

The package covers the full desk-scale pipeline: the two-line signal model
and mode-projection probabilities, Fisher-information bounds for direct
intensity detection and mode sorting, boundary-constrained maximum
likelihood estimation, exact and Monte Carlo error benchmarking, crosstalk
calibration, and LTI waveform predistortion for pulse carving.
"""

from .model import (
    INCOHERENT_PHASES,
    CrosstalkMatrix,
    LinePair,
    ModeDistribution,
    PhaseSetting,
    TemporalSignal,
    TwoModeProbs,
    apply_background,
    gaussian_amplitude,
    hg_projection_prob,
    intensity_spectrum,
    mode_distribution,
    perturbed_probs,
    signal_spectrum,
    signal_temporal,
)
from .information import (
    DI_SMALL_SEPARATION_COEFF,
    BoundResult,
    FisherValue,
    NumericError,
    crlb,
    fi_direct,
    fi_hg_full,
    fi_two_mode_approx,
    fi_two_mode_exact,
    superres_param,
    superres_param_analytic,
)
from .estimators import (
    DEFAULT_CEILING,
    CountRecord,
    Estimate,
    UndefinedEstimateError,
    mle_closed_form,
    mle_grid,
    raw_estimator,
)
from .statistics import (
    EfficiencyRecord,
    ErrorStats,
    InsufficientDataError,
    SamplingConfig,
    bootstrap_mse,
    exact_bias_profile,
    exact_mse,
    mc_error_stats,
    memory_efficiencies,
    min_resolvable,
    per,
    sample_counts,
    subtract_noise,
)
from .calibration import (
    CalibrationDataset,
    CalibrationResult,
    calibration_report,
    fit_crosstalk,
)
from .pulse import (
    ResponseSpectrum,
    UncorrectableBandError,
    Waveform,
    apply_response,
    correct_waveform,
    estimate_response,
    hg_waveform,
    read_waveform_csv,
    write_waveform_csv,
)

__version__ = "0.1.0"

__all__ = [
    "INCOHERENT_PHASES",
    "CrosstalkMatrix",
    "LinePair",
    "ModeDistribution",
    "PhaseSetting",
    "TemporalSignal",
    "TwoModeProbs",
    "apply_background",
    "gaussian_amplitude",
    "hg_projection_prob",
    "intensity_spectrum",
    "mode_distribution",
    "perturbed_probs",
    "signal_spectrum",
    "signal_temporal",
    "DI_SMALL_SEPARATION_COEFF",
    "BoundResult",
    "FisherValue",
    "NumericError",
    "crlb",
    "fi_direct",
    "fi_hg_full",
    "fi_two_mode_approx",
    "fi_two_mode_exact",
    "superres_param",
    "superres_param_analytic",
    "DEFAULT_CEILING",
    "CountRecord",
    "Estimate",
    "UndefinedEstimateError",
    "mle_closed_form",
    "mle_grid",
    "raw_estimator",
    "EfficiencyRecord",
    "ErrorStats",
    "InsufficientDataError",
    "SamplingConfig",
    "bootstrap_mse",
    "exact_bias_profile",
    "exact_mse",
    "mc_error_stats",
    "memory_efficiencies",
    "min_resolvable",
    "per",
    "sample_counts",
    "subtract_noise",
    "CalibrationDataset",
    "CalibrationResult",
    "calibration_report",
    "fit_crosstalk",
    "ResponseSpectrum",
    "UncorrectableBandError",
    "Waveform",
    "apply_response",
    "correct_waveform",
    "estimate_response",
    "hg_waveform",
    "read_waveform_csv",
    "write_waveform_csv",
    "__version__",
]
