"""Spherical cardioid distributions: evaluation, simulation, estimation and testing."""

from .cardioid import CardioidParams, canonicalize, density, proj_cdf, proj_pdf
from .errors import (CapabilityError, CardioidError, DegenerateEstimateError, DomainError,
                     NumericError, ResourceError)
from .estimation import FitResult, fisher_info, fit
from .gof import GofConfig, GofResult, bootstrap_test
from .sampling import SphereSample, make_rng, sample

__version__ = "0.1.0"

__all__ = [
    "CardioidParams", "canonicalize", "density", "proj_cdf", "proj_pdf",
    "CapabilityError", "CardioidError", "DegenerateEstimateError", "DomainError",
    "NumericError", "ResourceError", "FitResult", "fisher_info", "fit",
    "GofConfig", "GofResult", "bootstrap_test", "SphereSample", "make_rng", "sample",
]
