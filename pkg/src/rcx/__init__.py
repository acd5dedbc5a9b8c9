"""Estimation of transition probabilities for processes with random context representations."""

__version__ = "0.1.0"

from .core import Alphabet, Distribution, Past, d_tv
from .counts import CountIndex, Sample
from .estimator import FittedEstimator, fit
from .models import ArrivalDistribution, ContextTreeModel, RCRModel, RenewalModel, minimal_rcr

__all__ = [
    "Alphabet",
    "ArrivalDistribution",
    "ContextTreeModel",
    "CountIndex",
    "Distribution",
    "FittedEstimator",
    "Past",
    "RCRModel",
    "RenewalModel",
    "Sample",
    "d_tv",
    "fit",
    "minimal_rcr",
]
