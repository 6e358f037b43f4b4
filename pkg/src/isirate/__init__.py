"""Conditional firing-rate estimation for spike trains with Markov interspike intervals."""

__version__ = "0.1.0"

from .errors import (DivergentQuantity, InsufficientData, IsiRateError, NonFiringRegime,
                     ParseError, RejectedInput)
from .estimators import EstimatorConfig, FittedEstimator, IntensityPath, conditional_intensity_path, fit
from .isi import CountingView, IsiSequence, SpikeTrain, from_spike_times
from .validation import ValidationConfig, ValidationReport, validate

__all__ = [
    "CountingView", "DivergentQuantity", "EstimatorConfig", "FittedEstimator",
    "InsufficientData", "IntensityPath", "IsiRateError", "IsiSequence", "NonFiringRegime",
    "ParseError", "RejectedInput", "SpikeTrain", "ValidationConfig", "ValidationReport",
    "conditional_intensity_path", "fit", "from_spike_times", "validate",
]
