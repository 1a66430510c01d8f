"""Regulated stochastic clocks.

Library plus batch CLI for regulating Levy subordinators (three recipes,
real degree n >= 0), real-valued constant and Gaussian mixtures, density
inversion, moment-based estimation with profile likelihood, risk-neutral
option pricing, calibration, and path simulation.
"""

from ._kernels import BACKEND_NAME
from .clocks import (
    Clock,
    CumulantSet,
    LevyMeasureView,
    Poisson,
    TemperedStable,
    base_cumulants,
    base_levy_measure,
    bg_index,
    laplace_exponent,
)
from .errors import (
    BranchCutError,
    ConvergenceRegionError,
    DomainError,
    InfeasibleMomentsError,
    NumericalError,
    RegclockError,
    UnsupportedError,
)
from .regulate import (
    Regulation,
    RegType,
    hold_moments_reparam,
    jump_transform,
    regulated_laplace_exponent,
    regulated_levy_density,
    regulated_moments,
    rho,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "BranchCutError",
    "Clock",
    "ConvergenceRegionError",
    "CumulantSet",
    "DomainError",
    "InfeasibleMomentsError",
    "LevyMeasureView",
    "NumericalError",
    "Poisson",
    "RegclockError",
    "RegType",
    "Regulation",
    "TemperedStable",
    "UnsupportedError",
    "base_cumulants",
    "base_levy_measure",
    "bg_index",
    "hold_moments_reparam",
    "jump_transform",
    "laplace_exponent",
    "regulated_laplace_exponent",
    "regulated_levy_density",
    "regulated_moments",
    "rho",
]
