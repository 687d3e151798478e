"""Numerical laboratory for blow-up of semilinear wave equations with scale-invariant damping."""

from .exponents import (InadmissibleParameters, ModelParams, check_admissible, critical_q,
                        fujita_exponent, gamma_quadratic, mu_star, strauss_exponent)
from .solver import DataPair, SolverConfig, fit_scaling, run, sweep
from .testfunctions import TestFunction, TestFunctionSpec

__version__ = "0.1.0"

__all__ = [
    "InadmissibleParameters", "ModelParams", "check_admissible", "critical_q",
    "fujita_exponent", "gamma_quadratic", "mu_star", "strauss_exponent",
    "DataPair", "SolverConfig", "fit_scaling", "run", "sweep",
    "TestFunction", "TestFunctionSpec",
]
