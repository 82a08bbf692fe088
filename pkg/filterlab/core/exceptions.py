"""Exception hierarchy for numerical kernels and the experiment harness"""
from typing import Optional


class FilterLabError(Exception):
    """Base class for every error raised by filterlab"""


class DimensionMismatchError(FilterLabError, ValueError):
    """Operands live on Hilbert spaces of different dimension"""


class SiteCapExceededError(FilterLabError, ValueError):
    """Requested system size exceeds the configured cap"""


class ConvergenceError(FilterLabError):
    """An eigensolver or Krylov propagator did not converge"""


class SolverStagnationError(FilterLabError):
    """Shifted linear solve could not reach the requested residual"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class InvalidConfigError(FilterLabError):
    """Experiment configuration failed validation"""


class UnknownPresetError(FilterLabError, ValueError):
    """No preset registered under the requested name"""
