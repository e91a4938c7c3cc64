"""Truncated Gaussian moments, box probabilities and maximum likelihood.

The conditional covariance of a Gaussian vector given that some of its
coordinates fall in a box follows from the truncated moments of the bounded
coordinates: with ``B = cov[:, E] cov[E, E]^-1`` the regression of every
coordinate on the bounded block ``E``,

    cov_A = cov + B (V_A - cov[E, E]) B^T

where ``V_A`` is the covariance of ``E`` restricted to the box. A single
bounded coordinate has closed-form truncated moments; larger boxes are
integrated by seeded rejection sampling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .exceptions import (
    DegenerateConditioningError,
    OptimizationFailureError,
    OracleUnstableError,
)

_LOGGER = logging.getLogger(__name__)

MIN_EVENT_MASS = 1e-4
PRECISION_LOSS_GRADIENT = 1e-4
_PROBABILITY_FLOOR = 1e-300


def truncated_normal_moments(
    lower: float,
    upper: float,
    mean: float = 0.0,
    sd: float = 1.0,
) -> tuple[float, float, float]:
    """Return mean, variance and probability mass of a normal restricted to an interval.

    Args:
        lower (float): Lower bound, may be ``-inf``.
        upper (float): Upper bound, may be ``inf``.
        mean (float, optional): Mean of the untruncated normal. Defaults to 0.0.
        sd (float, optional): Standard deviation of the untruncated normal. Defaults to 1.0.

    Returns:
        tuple[float, float, float]: (conditional mean, conditional variance, mass).

    """  # noqa: E501
    if sd <= 0:
        msg = "sd must be positive"
        raise ValueError(msg)
    a = (lower - mean) / sd
    b = (upper - mean) / sd
    dist = stats.truncnorm(a, b, loc=mean, scale=sd)
    return float(dist.mean()), float(dist.var()), _interval_mass(a, b)


def _interval_mass(a: float, b: float) -> float:
    if a > 0:
        return float(stats.norm.sf(a) - stats.norm.sf(b))
    return float(stats.norm.cdf(b) - stats.norm.cdf(a))


def _bounded(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.isfinite(lower) | np.isfinite(upper))


def box_probability(
    mean: np.ndarray,
    cov: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
) -> float:
    """Return the Gaussian probability of the box ``lower <= v <= upper``.

    Unbounded coordinates are marginalized out before integrating.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    bounded = _bounded(lower, upper)
    if bounded.size == 0:
        return 1.0
    if bounded.size == 1:
        i = int(bounded[0])
        sd = math.sqrt(cov[i, i])
        return _interval_mass(
            (lower[i] - mean[i]) / sd,
            (upper[i] - mean[i]) / sd,
        )
    dist = stats.multivariate_normal(
        mean[bounded],
        cov[np.ix_(bounded, bounded)],
        seed=0,
    )
    return float(dist.cdf(upper[bounded], lower_limit=lower[bounded]))


def gaussian_conditional_moments(
    mean: np.ndarray,
    cov: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    draws: int = 200_000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Return the mean and covariance of a Gaussian vector conditional on a box.

    Args:
        mean (np.ndarray): Unconditional mean, shape (k,).
        cov (np.ndarray): Unconditional covariance, shape (k, k).
        lower (np.ndarray): Per-coordinate lower bounds, ``-inf`` where unbounded.
        upper (np.ndarray): Per-coordinate upper bounds, ``inf`` where unbounded.
        draws (int, optional): Draws used when more than one coordinate is bounded. Defaults to 200_000.
        seed (int, optional): Seed of the rejection sampler. Defaults to 0.

    Returns:
        tuple[np.ndarray, np.ndarray]: Conditional mean and covariance.

    Raises:
        OracleUnstableError: If the box has less than 1e-4 probability mass.

    """  # noqa: E501
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    bounded = _bounded(lower, upper)
    if bounded.size == 0:
        return mean.copy(), cov.copy()
    if bounded.size == 1:
        i = int(bounded[0])
        sd = math.sqrt(cov[i, i])
        mean_a, var_a, mass = truncated_normal_moments(
            lower[i],
            upper[i],
            mean[i],
            sd,
        )
        if mass < MIN_EVENT_MASS:
            raise OracleUnstableError(mass)
        b = cov[:, i]
        s = cov[i, i]
        return (
            mean + b * (mean_a - mean[i]) / s,
            cov + np.outer(b, b) * (var_a - s) / s**2,
        )

    cov_ee = cov[np.ix_(bounded, bounded)]
    rng = np.random.default_rng(seed)
    block = rng.multivariate_normal(mean[bounded], cov_ee, size=draws)
    inside = np.all((block >= lower[bounded]) & (block <= upper[bounded]), axis=1)
    mass = float(inside.mean())
    if mass < MIN_EVENT_MASS or inside.sum() < 2:  # noqa: PLR2004
        raise OracleUnstableError(mass)
    kept = block[inside]
    regression = np.linalg.solve(cov_ee, cov[bounded, :]).T
    mean_a = mean + regression @ (kept.mean(axis=0) - mean[bounded])
    cov_a = cov + regression @ (np.cov(kept, rowvar=False) - cov_ee) @ regression.T
    msg = f"Box integrated by rejection sampling: {int(inside.sum())} of {draws} draws inside"  # noqa: E501
    _LOGGER.debug(msg)
    return mean_a, (cov_a + cov_a.T) / 2


@dataclass(frozen=True)
class TruncatedFit:
    """Result of a truncated Gaussian maximum likelihood fit.

    Attributes:
        mean (np.ndarray): Fitted unconditional mean.
        covariance (np.ndarray): Fitted unconditional covariance.
        negative_log_likelihood (float): Mean negative log-likelihood at the optimum.
        trace (tuple[float, ...]): Objective value after each optimizer iteration.
        precision_loss (bool): Whether the optimizer stopped on precision loss with a small gradient.

    """  # noqa: E501

    mean: np.ndarray
    covariance: np.ndarray
    negative_log_likelihood: float
    trace: tuple[float, ...] = field(default=())
    precision_loss: bool = False

    @property
    def iterations(self) -> int:
        """Number of optimizer iterations."""
        return len(self.trace)


def fit_truncated_gaussian(
    data: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iter: int = 500,
    gtol: float = 1e-8,
) -> TruncatedFit:
    """Fit an unconditional Gaussian to rows observed only inside a box.

    The likelihood of each row is the Gaussian density renormalized by the box
    probability. Parameters are the mean and the Cholesky factor of the
    covariance (log-diagonal), estimated on data standardized by the observed
    moments, which also serve as the starting point. BFGS with central
    finite-difference gradients does the maximization.

    Args:
        data (np.ndarray): Observed rows, shape (n, k); all inside the box.
        lower (np.ndarray): Per-column lower bounds, ``-inf`` where unbounded.
        upper (np.ndarray): Per-column upper bounds, ``inf`` where unbounded.
        max_iter (int, optional): Iteration limit. Defaults to 500.
        gtol (float, optional): Gradient-norm convergence threshold. Defaults to 1e-8.

    Returns:
        TruncatedFit: The fitted unconditional moments.

    Raises:
        DegenerateConditioningError: If a column is constant.
        OptimizationFailureError: If the optimizer does not converge.

    """  # noqa: E501
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, np.newaxis]
    k = data.shape[1]
    center = data.mean(axis=0)
    scale = data.std(axis=0, ddof=1)
    if np.any(scale == 0):
        msg = "Cannot fit a truncated Gaussian to a constant column."
        raise DegenerateConditioningError(msg)
    standardized = (data - center) / scale
    lo = (np.broadcast_to(np.asarray(lower, dtype=float), (k,)) - center) / scale
    hi = (np.broadcast_to(np.asarray(upper, dtype=float), (k,)) - center) / scale
    tril = np.tril_indices(k)
    diagonal = np.diag_indices(k)

    def unpack(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        factor = np.zeros((k, k))
        factor[tril] = theta[k:]
        factor[diagonal] = np.exp(factor[diagonal])
        return theta[:k], factor @ factor.T

    def objective(theta: np.ndarray) -> float:
        mu, cov = unpack(theta)
        log_density = stats.multivariate_normal.logpdf(standardized, mu, cov)
        mass = max(box_probability(mu, cov, lo, hi), _PROBABILITY_FLOOR)
        return float(-np.mean(log_density) + math.log(mass))

    trace: list[float] = []
    result = optimize.minimize(
        objective,
        np.zeros(k + len(tril[0])),
        method="BFGS",
        jac="3-point",
        callback=lambda theta: trace.append(objective(theta)),
        options={"gtol": gtol, "maxiter": max_iter},
    )
    precision_loss = False
    if not result.success:
        gradient = float(np.max(np.abs(result.jac)))
        if result.status == 2 and gradient < PRECISION_LOSS_GRADIENT:  # noqa: PLR2004
            precision_loss = True
            msg = f"Truncated MLE stopped on precision loss with gradient {gradient:.2e}; accepting the fit"  # noqa: E501
            _LOGGER.warning(msg)
        else:
            msg = f"Truncated MLE did not converge: {result.message}"
            raise OptimizationFailureError(msg, trace)
    mu, cov = unpack(result.x)
    msg = f"Truncated MLE converged after {len(trace)} iterations"
    _LOGGER.debug(msg)
    return TruncatedFit(
        mean=center + scale * mu,
        covariance=np.outer(scale, scale) * cov,
        negative_log_likelihood=float(result.fun),
        trace=tuple(trace),
        precision_loss=precision_loss,
    )
