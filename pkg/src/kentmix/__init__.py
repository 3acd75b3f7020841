"""Mixtures of Kent distributions on the unit sphere S^2.

Approximate maximum-likelihood fitting by block successive lower-bound
maximization, BIC-like order selection and plug-in MAP clustering.
"""

from kentmix.errors import (
    ConvergenceError,
    DegenerateDataError,
    DomainError,
    FitError,
    FormatError,
    RetractionError,
    UnboundedObjectiveError,
    UnsupportedSamplingError,
)
from kentmix.model import KentParams, MixtureModel
from kentmix.fitter import FitConfig, FitReport, fit
from kentmix.selection import (
    adjusted_rand_index,
    bic_criterion,
    map_classify,
    select_g,
)

__all__ = [
    "ConvergenceError",
    "DegenerateDataError",
    "DomainError",
    "FitConfig",
    "FitError",
    "FitReport",
    "FormatError",
    "KentParams",
    "MixtureModel",
    "RetractionError",
    "UnboundedObjectiveError",
    "UnsupportedSamplingError",
    "adjusted_rand_index",
    "bic_criterion",
    "fit",
    "map_classify",
    "select_g",
]

__version__ = "0.1.0"
