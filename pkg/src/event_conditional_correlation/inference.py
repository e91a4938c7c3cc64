"""Standard errors and confidence intervals for event conditional correlation.

For a scalar covariate the corrected estimator is a smooth map of
``theta = (rho_xy, rho_xz, rho_yz, delta)``:

    phi(a, b, c, d) = (a + b c d) / sqrt((1 + b^2 d)(1 + c^2 d))

so its asymptotic variance is ``grad(phi) Sigma_theta grad(phi)^T / n``, with
``Sigma_theta`` estimated from the empirical influence functions of the three
correlations and of the normalized variance shift. Any estimator, including
the multivariate ones, also gets percentile intervals from a row bootstrap.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from scipy import stats

from .estimators import EccEstimate, EstimateMethod, ecc_estimate
from .events import event_mask
from .exceptions import (
    DegenerateConditioningError,
    DimensionMismatchError,
    EccError,
    InsufficientEventSampleError,
    UnstableBootstrapError,
)
from .parallel import map_ordered
from .sample import MIN_ROWS

if TYPE_CHECKING:
    from .events import EventSpec
    from .sample import Sample

_LOGGER = logging.getLogger(__name__)

MIN_REPLICATES = 100
MAX_FAILURE_SHARE = 0.10

Estimator = Callable[["Sample", "EventSpec"], EccEstimate]


class CIMethod(str, Enum):
    """How a confidence interval was built."""

    DELTA = "delta"
    BOOTSTRAP_PERCENTILE = "bootstrap-percentile"


@dataclass(frozen=True)
class CI:
    """A confidence interval.

    Attributes:
        level (float): Nominal coverage in (0, 1).
        lower (float): Lower bound.
        upper (float): Upper bound.
        method (CIMethod): Construction method.
        failures (int): Bootstrap replicates on which the estimator failed.

    """

    level: float
    lower: float
    upper: float
    method: CIMethod
    failures: int = 0

    def __post_init__(self) -> None:
        """Check the interval is ordered."""
        if not self.lower <= self.upper:
            msg = f"CI bounds out of order: {self.lower} > {self.upper}"
            raise ValueError(msg)


@dataclass(frozen=True)
class ThetaBundle:
    """Point estimate of theta with its asymptotic covariance.

    Attributes:
        theta (np.ndarray): ``(rho_xy, rho_xz, rho_yz, delta)``.
        sigma_theta (np.ndarray): 4x4 asymptotic covariance of ``sqrt(n) (theta_hat - theta)``.
        n (int): Sample size.

    """  # noqa: E501

    theta: np.ndarray
    sigma_theta: np.ndarray
    n: int

    def __post_init__(self) -> None:
        """Validate shapes and symmetry."""
        theta = np.asarray(self.theta, dtype=float)
        sigma = np.asarray(self.sigma_theta, dtype=float)
        if theta.shape != (4,) or sigma.shape != (4, 4):
            msg = f"theta must have 4 entries and sigma_theta 4x4, got {theta.shape} and {sigma.shape}"  # noqa: E501
            raise DimensionMismatchError(msg)
        if not np.allclose(sigma, sigma.T):
            msg = "sigma_theta must be symmetric"
            raise ValueError(msg)
        if self.n < 1:
            msg = "n must be at least 1"
            raise ValueError(msg)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma_theta", sigma)


def _check_domain(theta: Sequence[float]) -> tuple[float, float, float, float]:
    a, b, c, d = (float(v) for v in theta)
    if 1 + b * b * d <= 0 or 1 + c * c * d <= 0:
        msg = f"phi is undefined at theta={tuple(theta)}: 1 + b^2 d and 1 + c^2 d must be positive."  # noqa: E501
        raise DegenerateConditioningError(msg)
    return a, b, c, d


def phi(theta: Sequence[float]) -> float:
    """Return the conditional correlation as a function of theta."""
    a, b, c, d = _check_domain(theta)
    return (a + b * c * d) / math.sqrt((1 + b * b * d) * (1 + c * c * d))


def phi_gradient(theta: Sequence[float]) -> np.ndarray:
    """Return the analytic gradient of ``phi`` with respect to ``(a, b, c, d)``."""
    a, b, c, d = _check_domain(theta)
    p = 1 + b * b * d
    q = 1 + c * c * d
    root = math.sqrt(p * q)
    numerator = a + b * c * d
    return np.array(
        [
            1 / root,
            c * d / root - numerator * b * d / (p * root),
            b * d / root - numerator * c * d / (q * root),
            b * c / root - 0.5 * numerator * (b * b / p + c * c / q) / root,
        ],
    )


def delta_method_se(bundle: ThetaBundle) -> float:
    """Return ``sqrt(grad Sigma grad^T / n)`` at the bundle's theta.

    A quadratic form that comes out negative through rounding is clipped to 0
    and logged as a warning.
    """
    gradient = phi_gradient(bundle.theta)
    variance = float(gradient @ bundle.sigma_theta @ gradient)
    if variance < 0:
        msg = f"Delta-method quadratic form {variance:.3g} is negative; clipping to 0"
        _LOGGER.warning(msg)
        variance = 0.0
    return math.sqrt(variance / bundle.n)


def _standardize(values: np.ndarray) -> np.ndarray:
    sd = values.std()
    if sd == 0:
        msg = "Cannot standardize a constant column."
        raise DegenerateConditioningError(msg)
    return (values - values.mean()) / sd


def estimate_theta(sample: Sample, event: EventSpec) -> ThetaBundle:
    """Estimate theta and its asymptotic covariance for a scalar covariate.

    Args:
        sample (Sample): Full sample with X, Y and ``Z1 == Z2`` a single column.
        event (EventSpec): Event over the covariate.

    Returns:
        ThetaBundle: Estimated theta and influence-function covariance.

    Raises:
        DimensionMismatchError: If the covariate block is not one shared column.

    """
    sample.require_roles()
    if sample.z1 != sample.z2 or len(sample.z1) != 1:
        msg = "The analytic delta method needs Z1 == Z2 with a single column; use bootstrap_ci otherwise."  # noqa: E501
        raise DimensionMismatchError(msg)
    mask = event_mask(sample, event)
    count = int(mask.sum())
    if count < MIN_ROWS:
        raise InsufficientEventSampleError(count, MIN_ROWS)

    x = _standardize(sample.column(sample.x))
    y = _standardize(sample.column(sample.y))
    z_raw = sample.column(sample.z1[0])
    z = _standardize(z_raw)

    def correlation_influence(u: np.ndarray, v: np.ndarray) -> tuple[float, np.ndarray]:  # noqa: E501
        r = float(np.mean(u * v))
        return r, u * v - r * (u * u + v * v) / 2

    r_xy, if_xy = correlation_influence(x, y)
    r_xz, if_xz = correlation_influence(x, z)
    r_yz, if_yz = correlation_influence(y, z)

    share = count / sample.n
    centered = z_raw - z_raw.mean()
    variance = float(centered @ centered) / (sample.n - 1)
    event_values = z_raw[mask]
    event_variance = float(np.var(event_values, ddof=1))
    if_variance = centered**2 - variance
    if_event_variance = np.where(
        mask,
        ((z_raw - event_values.mean()) ** 2 - event_variance) / share,
        0.0,
    )
    if_delta = if_event_variance / variance - event_variance * if_variance / variance**2  # noqa: E501

    influence = np.column_stack([if_xy, if_xz, if_yz, if_delta])
    sigma = influence.T @ influence / sample.n
    theta = np.array([r_xy, r_xz, r_yz, event_variance / variance - 1])
    return ThetaBundle(theta=theta, sigma_theta=(sigma + sigma.T) / 2, n=sample.n)


def delta_method_estimate(
    sample: Sample,
    event: EventSpec,
    level: float = 0.95,
) -> EccEstimate:
    """Return the corrected estimate with a delta-method standard error and interval.

    The point estimate equals ``ecc_estimate`` with empirical event moments; the
    interval is ``rho +- z se`` clipped to [-1, 1].
    """  # noqa: E501
    _check_level(level)
    bundle = estimate_theta(sample, event)
    raw = phi(bundle.theta)
    rho = float(np.clip(raw, -1.0, 1.0))
    if rho != raw:
        msg = f"Delta-method estimate {raw:.6g} lies outside [-1, 1] and was clamped"
        _LOGGER.warning(msg)
    se = delta_method_se(bundle)
    half_width = float(stats.norm.ppf(0.5 + level / 2)) * se
    estimate = EccEstimate(
        rho=rho,
        n_total=sample.n,
        n_event=int(event_mask(sample, event).sum()),
        method=EstimateMethod.FULL_SAMPLE_CORRECTED,
        clamped=rho != raw,
    )
    return estimate.with_interval(
        max(rho - half_width, -1.0),
        min(rho + half_width, 1.0),
        CIMethod.DELTA.value,
        se=se,
    )


def _check_level(level: float) -> None:
    if not 0 < level < 1:
        msg = f"level must lie in (0, 1), got {level}"
        raise ValueError(msg)


def percentile_interval(values: Sequence[float], level: float) -> tuple[float, float]:
    """Return the equal-tailed percentile interval of replicate values."""
    _check_level(level)
    tail = (1 - level) / 2
    lower, upper = np.quantile(np.asarray(values, dtype=float), [tail, 1 - tail])
    return float(lower), float(upper)


def bootstrap_ci(
    sample: Sample,
    event: EventSpec,
    estimator: Estimator = ecc_estimate,
    replicates: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    threads: int | None = None,
) -> CI:
    """Build a percentile interval from row-resampled re-estimates.

    Each replicate draws ``n`` whole rows with replacement from its own stream
    ``default_rng([seed, b])`` and recomputes the event on the resample.

    Args:
        sample (Sample): The sample to resample.
        event (EventSpec): The event passed to the estimator.
        estimator (Estimator, optional): Any function of (sample, event). Defaults to ecc_estimate.
        replicates (int, optional): Number of resamples B, at least 100. Defaults to 1000.
        level (float, optional): Nominal coverage. Defaults to 0.95.
        seed (int, optional): Base seed. Defaults to 0.
        threads (int | None, optional): Worker threads. Defaults to the logical core count.

    Returns:
        CI: The percentile interval.

    Raises:
        UnstableBootstrapError: If the estimator fails on more than 10% of replicates.

    """  # noqa: E501
    if replicates < MIN_REPLICATES:
        msg = f"replicates must be at least {MIN_REPLICATES}"
        raise ValueError(msg)
    _check_level(level)

    def replicate(b: int) -> float | None:
        rng = np.random.default_rng([seed, b])
        indices = rng.integers(0, sample.n, size=sample.n)
        try:
            return estimator(sample.take(indices), event).rho
        except EccError as err:
            msg = f"Bootstrap replicate {b} failed: {err}"
            _LOGGER.debug(msg)
            return None

    results = map_ordered(replicate, range(replicates), threads)
    values = [r for r in results if r is not None]
    failures = replicates - len(values)
    if failures > MAX_FAILURE_SHARE * replicates:
        raise UnstableBootstrapError(failures, replicates)
    if failures:
        msg = f"Estimator failed on {failures} of {replicates} bootstrap replicates"
        _LOGGER.warning(msg)
    lower, upper = percentile_interval(values, level)
    return CI(
        level=level,
        lower=lower,
        upper=upper,
        method=CIMethod.BOOTSTRAP_PERCENTILE,
        failures=failures,
    )
