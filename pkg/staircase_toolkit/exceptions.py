"""Error hierarchy of the toolkit.

Each class carries the process exit code used by the scenario commands.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    import numpy as np

EXIT_SUCCESS = 0
EXIT_SOFTWARE_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_NON_CONVERGENCE = 4


class ToolkitError(Exception):
    exit_code = EXIT_SOFTWARE_FAILURE


class ToolkitValidationError(ToolkitError):
    exit_code = EXIT_VALIDATION


class StructuralError(ToolkitValidationError):
    """Inconsistent dimensions, empty control window or incompatible grids."""


class ResolutionError(ToolkitValidationError):
    """Sample grid too coarse for the requested number of modes."""


class ConfigurationError(ToolkitValidationError):
    """Numerical options that cannot work, e.g. an unstable explicit step."""


class HypothesisError(ToolkitValidationError):
    """The data do not meet the hypotheses a construction relies on."""


class BracketError(ToolkitValidationError):
    """Bisection endpoints do not bracket the feasibility switch."""


class ScenarioConfigError(ToolkitValidationError):
    def __init__(self, message: str, *, path=None, key=None, line=None):
        self.path = path
        self.key = key
        self.line = line
        context = []
        if path is not None:
            context.append(str(path))
        if line is not None:
            context.append(f"line {line}")
        if key is not None:
            context.append(f"key {key}")
        prefix = f"{', '.join(context)}: " if context else ""
        super().__init__(f"{prefix}{message}")


class InfeasibilityFinding(ToolkitError):
    exit_code = EXIT_INFEASIBLE


class InfeasibleTargetError(InfeasibilityFinding):
    def __init__(self, message: str, *, verdict=None):
        self.verdict = verdict
        super().__init__(message)


class NumericalFailure(ToolkitError):
    exit_code = EXIT_NON_CONVERGENCE


class ControlSynthesisError(NumericalFailure):
    """The Gramian is too close to singular to invert."""


class PlanningError(NumericalFailure):
    """A staircase plan could not be built within its limits."""


class NearUncontrollableWarning(UserWarning):
    def __init__(self, message: str, eigenvalue: float, eigenvector: np.ndarray):
        self.eigenvalue = eigenvalue
        self.eigenvector = eigenvector
        super().__init__(message)
