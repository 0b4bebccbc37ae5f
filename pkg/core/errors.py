# core/errors.py
"""Exception hierarchy shared by the estimation toolkit."""

from typing import Optional

import numpy as np


class DseError(Exception):
    """Base class for every toolkit error."""


class CaseParseError(DseError, ValueError):
    """Malformed record in a case file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CaseValidationError(DseError, ValueError):
    """Case records parse but describe an invalid network."""


class DimensionError(DseError, ValueError):
    """Array shapes disagree with the model dimensions."""


class DecompositionError(DseError, np.linalg.LinAlgError):
    """Cholesky factorization failed at a (1-based) pivot."""

    def __init__(self, message: str, pivot: Optional[int] = None):
        self.pivot = pivot
        super().__init__(message)


class SingularWeightError(DseError, ValueError):
    """Entropy weights diverge for zero error gaps."""


class FixedPointDivergence(DseError):
    """Fixed-point measurement update did not reach its tolerance."""

    def __init__(self, message: str, last_iterate: np.ndarray,
                 relative_change: float, iterations: int):
        self.last_iterate = last_iterate
        self.relative_change = relative_change
        self.iterations = iterations
        super().__init__(message)


class FilterStepError(DseError):
    """A filter step failed; carries the 1-based step index."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"step {step}: {message}")


class ConfigError(DseError, ValueError):
    """Run configuration is invalid or incomplete."""


class BenchmarkError(DseError, KeyError):
    """Unknown benchmark function id."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ExperimentAborted(DseError):
    """Some Monte Carlo experiments raised; ``report`` reduces the ones that finished."""

    def __init__(self, message: str, report=None, failed_experiments=()):
        self.report = report
        self.failed_experiments = tuple(failed_experiments)
        super().__init__(message)
