"""Custom exceptions for event conditional correlation estimation.

This module defines the exception classes raised by the estimators, the
simulation and study harnesses and the command-line interface to signal
data and estimation failures. Invalid arguments raise ``ValueError`` instead.
"""

from __future__ import annotations

from collections.abc import Sequence


class EccError(Exception):
    """Base exception for data and estimation errors raised by this package."""


class SingularDesignError(EccError):
    """Exception raised when a regression design is rank deficient after centering."""  # noqa: E501

    def __init__(self, columns: Sequence[str]) -> None:
        """Initialize the error.

        Args:
            columns (Sequence[str]): The covariate columns responsible for the rank deficiency.

        """  # noqa: E501
        self.columns = tuple(columns)
        msg = f"Singular design: columns {', '.join(self.columns)} are linearly dependent or constant after centering."  # noqa: E501
        super().__init__(msg)


class InsufficientEventSampleError(EccError):
    """Exception raised when an event selects too few rows to compute moments."""

    def __init__(self, count: int, minimum: int = 3) -> None:
        """Initialize the error.

        Args:
            count (int): Number of rows the event selected.
            minimum (int, optional): Number of rows required. Defaults to 3.

        """
        self.count = count
        self.minimum = minimum
        msg = f"Event selects {count} rows, at least {minimum} are required."
        super().__init__(msg)


class DegenerateConditioningError(EccError):
    """Exception raised when a variance-shift denominator is not strictly positive."""  # noqa: E501


class OptimizationFailureError(EccError):
    """Exception raised when the truncated maximum likelihood fit does not converge."""  # noqa: E501

    def __init__(self, msg: str, trace: Sequence[float]) -> None:
        """Initialize the error.

        Args:
            msg (str): Description of the failure.
            trace (Sequence[float]): Objective value after each optimizer iteration.

        """
        self.trace = tuple(trace)
        super().__init__(f"{msg} (after {len(self.trace)} iterations)")


class UnstableBootstrapError(EccError):
    """Exception raised when too many bootstrap replicates fail."""

    def __init__(self, failures: int, replicates: int) -> None:
        """Initialize the error.

        Args:
            failures (int): Number of failed replicates.
            replicates (int): Number of attempted replicates.

        """
        self.failures = failures
        self.replicates = replicates
        msg = f"Estimator failed on {failures} of {replicates} bootstrap replicates."
        super().__init__(msg)


class OracleUnstableError(EccError):
    """Exception raised when an oracle event has too little probability mass."""

    def __init__(self, mass: float) -> None:
        """Initialize the error.

        Args:
            mass (float): The event probability mass.

        """
        self.mass = mass
        msg = f"Event mass {mass:.3g} is below 1e-4, oracle value is unstable."
        super().__init__(msg)


class UndefinedStatisticError(EccError):
    """Exception raised when a test statistic is undefined for the given data."""


class PowerIterationError(EccError):
    """Exception raised when eigenvector centrality fails to converge."""


class DataParseError(EccError):
    """Exception raised when an input file cannot be parsed."""

    def __init__(self, msg: str, line: int | None = None) -> None:
        """Initialize the error.

        Args:
            msg (str): Description of the problem.
            line (int | None, optional): 1-based line number in the input file. Defaults to None.

        """  # noqa: E501
        self.line = line
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


class EventSpecError(EccError):
    """Exception raised when an event specification is malformed or unusable."""


class DimensionMismatchError(EccError):
    """Exception raised when matrix or block dimensions do not agree."""


class NonPositiveDefiniteError(EccError):
    """Exception raised when a correlation matrix is not positive definite."""


class EmptyRegimeError(EccError):
    """Exception raised when a regime split leaves a regime without rows."""


class StudyFailureError(EccError):
    """Exception raised when too many Monte Carlo study cells fail."""


class BinMergeError(EccError):
    """Exception raised when merging under-occupied bins leaves fewer than two bins."""  # noqa: E501


class MatrixCorrectionError(EccError):
    """Exception raised when too many entries of a corrected matrix fail."""
