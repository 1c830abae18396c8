"""Discrete fractional p-Laplacian boundary value problems on [0, T]."""

from .energy import EnergyContext, EnergyReport, energy, gradient, weak_residual
from .fracops import FracOperator, Kind, apply, assemble, convergence_order, gl_weights
from .grid import Grid, GridFunction, integrate, linf_norm, lp_norm, make_grid
from .problem import (
    Coefficient,
    ConfigurationError,
    HypothesisReport,
    Nonlinearity,
    NumericalFailure,
    check_h1,
    check_h2,
    check_h2prime,
    check_h3,
    check_h4,
)
from .solver import SolveOptions, SolveResult, critical_point, minimize, multistart, scaling_probe
from .space import embedding_constants, verify_embedding

__version__ = "0.1.0"

__all__ = [
    "Coefficient", "ConfigurationError", "EnergyContext", "EnergyReport", "FracOperator",
    "Grid", "GridFunction", "HypothesisReport", "Kind", "Nonlinearity", "NumericalFailure",
    "SolveOptions", "SolveResult", "apply", "assemble", "check_h1", "check_h2",
    "check_h2prime", "check_h3", "check_h4", "convergence_order", "critical_point",
    "embedding_constants", "energy", "gl_weights", "gradient", "integrate", "linf_norm",
    "lp_norm", "make_grid", "minimize", "multistart", "scaling_probe", "verify_embedding",
    "weak_residual",
]
