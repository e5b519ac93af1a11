"""Regime analysis for cyclic feedback loops ``dx_i/dt = alpha_i f_i(x_{i-1}) - x_i``."""
from .errors import (
    ConsistencyError,
    ConvergenceFailure,
    CycloneError,
    DomainError,
    FormatError,
    SingularityError,
    StepSizeUnderflow,
    SuspectCount,
)
from .network import CyclicNetwork, Equilibrium, find_equilibria
from .regulation import Affine, Hill, ShiftedHill, check_gamma_half_convex, schwarzian
from .stability import Branch, RegimeReport, classify_network, classify_point, spectrum, thresholds

__version__ = "0.1.0"

__all__ = [
    "Affine", "Branch", "ConsistencyError", "ConvergenceFailure", "CyclicNetwork", "CycloneError",
    "DomainError", "Equilibrium", "FormatError", "Hill", "RegimeReport", "ShiftedHill",
    "SingularityError", "StepSizeUnderflow", "SuspectCount", "check_gamma_half_convex",
    "classify_network", "classify_point", "find_equilibria", "schwarzian", "spectrum", "thresholds",
]
