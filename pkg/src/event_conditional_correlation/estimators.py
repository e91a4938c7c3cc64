"""Population formulas and plug-in estimators of event conditional correlation.

Write ``X = Z1 b_x + e_x`` and ``Y = Z2 b_y + e_y`` for the linear projections
of X and Y on two covariate blocks. When the residual covariance does not
depend on the event A and the residuals stay conditionally uncorrelated with
the projections, the covariance shift of the blocks under A is all that
separates the conditional from the unconditional correlation:

    rho_xy|A = (cov_xy + b_x' d12 b_y) / sqrt((var_x + b_x' d11 b_x)(var_y + b_y' d22 b_y))

with ``dij = cov(Zi, Zj | A) - cov(Zi, Zj)``. The same identity read backwards
recovers the unconditional correlation from a sample observed only under A.
All moments use empirically centered data and the ``1/(n-1)`` normalization.
"""  # noqa: E501

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Protocol

import numpy as np

from .events import EventSpec, event_intervals, event_mask
from .exceptions import (
    DegenerateConditioningError,
    DimensionMismatchError,
    EventSpecError,
    InsufficientEventSampleError,
    SingularDesignError,
)
from .sample import MIN_ROWS, Sample
from .truncated import (
    fit_truncated_gaussian,
    gaussian_conditional_moments,
    truncated_normal_moments,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

_LOGGER = logging.getLogger(__name__)

_PD_TOLERANCE = 1e-12


class EstimateMethod(str, Enum):
    """How an estimate was produced."""

    FULL_SAMPLE_CORRECTED = "full-sample-corrected"
    SUBSAMPLE = "subsample"
    POPULATION = "population"
    IMPLIED_UNCONDITIONAL = "implied-unconditional"


class DeltaStrategy(str, Enum):
    """Source of the conditional covariate moments."""

    EMPIRICAL = "empirical"
    GAUSSIAN_MODEL = "gaussian-model"


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares projection of a response on a covariate block.

    Attributes:
        response (str): The response column.
        covariates (tuple[str, ...]): The covariate columns.
        beta (np.ndarray): Coefficients in response units per covariate unit.
        intercept (float): Intercept restoring the uncentered means.
        residuals (np.ndarray): Response minus fitted values, one per row.

    """

    response: str
    covariates: tuple[str, ...]
    beta: np.ndarray
    intercept: float
    residuals: np.ndarray


@dataclass(frozen=True)
class DeltaShift:
    """Conditional minus unconditional covariance between two covariate blocks."""

    delta: np.ndarray
    event_mass: float
    rows: tuple[str, ...] = ()
    cols: tuple[str, ...] = ()


@dataclass(frozen=True)
class EccEstimate:
    """A correlation estimate with its provenance.

    Attributes:
        rho (float): Point estimate in [-1, 1].
        se (float | None): Standard error when available.
        ci (tuple[float, float] | None): Confidence interval when available.
        n_total (int): Rows of the sample the estimate was computed from.
        n_event (int): Rows satisfying the event.
        method (EstimateMethod): Estimator used.
        clamped (bool): Whether the raw value fell outside [-1, 1] and was clamped.
        ci_method (str | None): ``delta`` or ``bootstrap-percentile`` when a CI is present.

    """  # noqa: E501

    rho: float
    se: float | None = None
    ci: tuple[float, float] | None = None
    n_total: int = 0
    n_event: int = 0
    method: EstimateMethod = EstimateMethod.FULL_SAMPLE_CORRECTED
    clamped: bool = False
    ci_method: str | None = None

    def __post_init__(self) -> None:
        """Check the range invariants."""
        if not -1.0 <= self.rho <= 1.0:
            msg = f"rho must lie in [-1, 1], got {self.rho}"
            raise ValueError(msg)
        if self.se is not None and self.se < 0:
            msg = "se must be nonnegative"
            raise ValueError(msg)
        if self.ci is not None and not self.ci[0] <= self.rho <= self.ci[1]:
            msg = f"CI {self.ci} does not contain the estimate {self.rho}"
            raise ValueError(msg)

    def with_interval(
        self,
        lower: float,
        upper: float,
        ci_method: str,
        se: float | None = None,
    ) -> EccEstimate:
        """Return a copy carrying an interval, widened to contain the estimate."""
        return replace(
            self,
            ci=(min(lower, self.rho), max(upper, self.rho)),
            ci_method=ci_method,
            se=self.se if se is None else se,
        )


@dataclass(frozen=True)
class CorrelationParams:
    """Correlations of (X, Y, Z) and the normalized variance shift of Z.

    Attributes:
        rho_xy (float): Correlation of X and Y.
        rho_xz (float): Correlation of X and Z.
        rho_yz (float): Correlation of Y and Z.
        delta (float): ``var(Z | A) / var(Z) - 1``; at least -1.

    """

    rho_xy: float
    rho_xz: float
    rho_yz: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        """Validate ranges and positive definiteness."""
        for name in ("rho_xy", "rho_xz", "rho_yz"):
            value = getattr(self, name)
            if not -1.0 < value < 1.0:
                msg = f"{name} must lie in (-1, 1), got {value}"
                raise ValueError(msg)
        if not self.delta >= -1.0:
            msg = f"delta must be at least -1, got {self.delta}"
            raise ValueError(msg)
        if np.linalg.eigvalsh(self.correlation_matrix())[0] <= _PD_TOLERANCE:
            msg = f"Correlations ({self.rho_xy}, {self.rho_xz}, {self.rho_yz}) do not form a positive definite matrix"  # noqa: E501
            raise ValueError(msg)

    def correlation_matrix(self) -> np.ndarray:
        """Return the 3x3 correlation matrix of (X, Y, Z)."""
        return np.array(
            [
                [1.0, self.rho_xy, self.rho_xz],
                [self.rho_xy, 1.0, self.rho_yz],
                [self.rho_xz, self.rho_yz, 1.0],
            ],
        )

    def as_theta(self) -> np.ndarray:
        """Return ``(rho_xy, rho_xz, rho_yz, delta)`` as a vector."""
        return np.array([self.rho_xy, self.rho_xz, self.rho_yz, self.delta])


@dataclass(frozen=True)
class AssumptionDiagnostics:
    """Empirical gaps of the two moment assumptions behind the estimators."""

    a1_gap: float
    a2_gap: float
    bias_bound_scale: float


@dataclass(frozen=True)
class CovarianceShift:
    """Difference of two covariance matrices and its spectrum."""

    delta_matrix: np.ndarray
    singular_values: np.ndarray
    effective_rank: int
    z_dim: int

    @property
    def within_rank_bound(self) -> bool:
        """Whether the effective rank does not exceed the covariate dimension."""
        return self.effective_rank <= self.z_dim


@dataclass(frozen=True)
class EigenSlice:
    """Eigendecomposition of a conditional covariance at one threshold."""

    threshold: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _covariance(data: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.cov(data, rowvar=False, ddof=1))


def _pair_moments(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xc = x - x.mean()
    yc = y - y.mean()
    scale = len(x) - 1
    return (
        float(xc @ yc) / scale,
        float(xc @ xc) / scale,
        float(yc @ yc) / scale,
    )


def _clamp(value: float, label: str) -> tuple[float, bool]:
    if -1.0 <= value <= 1.0:
        return value, False
    msg = f"{label} estimate {value:.6g} lies outside [-1, 1] and was clamped"
    _LOGGER.warning(msg)
    return float(np.clip(value, -1.0, 1.0)), True


def ols_fit(
    sample: Sample,
    response: str,
    covariates: Sequence[str],
) -> RegressionFit:
    """Project a response column on covariate columns by least squares.

    Args:
        sample (Sample): The data.
        response (str): Response column.
        covariates (Sequence[str]): Covariate columns.

    Returns:
        RegressionFit: Coefficients on centered data and residuals.

    Raises:
        SingularDesignError: If the centered design is rank deficient.

    """
    covariates = tuple(covariates)
    design = sample.block(covariates)
    design = design - design.mean(axis=0)
    target = sample.column(response)
    target_mean = float(target.mean())
    centered = target - target_mean

    if np.linalg.matrix_rank(design) < len(covariates):
        offending: list[str] = []
        kept: list[int] = []
        for i, name in enumerate(covariates):
            if np.linalg.matrix_rank(design[:, [*kept, i]]) > len(kept):
                kept.append(i)
            else:
                offending.append(name)
        raise SingularDesignError(offending)

    beta, *_ = np.linalg.lstsq(design, centered, rcond=None)
    residuals = centered - design @ beta
    intercept = target_mean - float(sample.block(covariates).mean(axis=0) @ beta)
    return RegressionFit(
        response=response,
        covariates=covariates,
        beta=beta,
        intercept=intercept,
        residuals=residuals,
    )


def delta_shift(
    sample: Sample,
    event: EventSpec,
    block_i: Sequence[str] | None = None,
    block_j: Sequence[str] | None = None,
    strategy: DeltaStrategy = DeltaStrategy.EMPIRICAL,
    draws: int = 200_000,
    seed: int = 0,
) -> DeltaShift:
    """Estimate ``cov(Zi, Zj | A) - cov(Zi, Zj)`` from a full sample.

    Args:
        sample (Sample): The full available sample.
        event (EventSpec): The conditioning event.
        block_i (Sequence[str] | None, optional): Row block. Defaults to Z1.
        block_j (Sequence[str] | None, optional): Column block. Defaults to Z2.
        strategy (DeltaStrategy, optional): ``empirical`` uses the rows satisfying A;
            ``gaussian-model`` fits a Gaussian to the whole sample and truncates it. Defaults to empirical.
        draws (int, optional): Rejection draws for multi-column boxes under the Gaussian model. Defaults to 200_000.
        seed (int, optional): Seed of those draws. Defaults to 0.

    Returns:
        DeltaShift: The shift matrix and the empirical event mass.

    Raises:
        InsufficientEventSampleError: If the event selects fewer than 3 rows.

    """  # noqa: E501
    rows = tuple(sample.z1 if block_i is None else block_i)
    cols = tuple(sample.z2 if block_j is None else block_j)
    mask = event_mask(sample, event)
    count = int(mask.sum())
    if count < MIN_ROWS:
        raise InsufficientEventSampleError(count, MIN_ROWS)
    mass = count / sample.n

    if strategy is DeltaStrategy.EMPIRICAL:
        union = list(dict.fromkeys((*rows, *cols)))
        full = _covariance(sample.block(union))
        conditional = _covariance(sample.subset(mask).block(union))
        shift = conditional - full
    else:
        union = list(dict.fromkeys((*rows, *cols, *event.columns)))
        block = sample.block(union)
        intervals = event_intervals(sample, event)
        lower = np.array([intervals[c].lower if c in intervals else -math.inf for c in union])  # noqa: E501
        upper = np.array([intervals[c].upper if c in intervals else math.inf for c in union])  # noqa: E501
        full = _covariance(block)
        _, conditional = gaussian_conditional_moments(
            block.mean(axis=0),
            full,
            lower,
            upper,
            draws=draws,
            seed=seed,
        )
        shift = conditional - full

    position = {name: k for k, name in enumerate(union)}
    delta = shift[np.ix_([position[c] for c in rows], [position[c] for c in cols])]
    return DeltaShift(delta=delta, event_mass=mass, rows=rows, cols=cols)


def ecc_formula(
    cov_xy: float,
    var_x: float,
    var_y: float,
    beta_x: np.ndarray,
    beta_y: np.ndarray,
    delta_11: np.ndarray,
    delta_22: np.ndarray,
    delta_12: np.ndarray,
) -> float:
    """Evaluate the conditional correlation from unconditional moments and block shifts.

    Returns:
        float: The unclamped conditional correlation.

    Raises:
        DegenerateConditioningError: If a conditional variance is not positive.

    """  # noqa: E501
    beta_x = np.atleast_1d(beta_x)
    beta_y = np.atleast_1d(beta_y)
    numerator = cov_xy + float(beta_x @ np.atleast_2d(delta_12) @ beta_y)
    var_x_a = var_x + float(beta_x @ np.atleast_2d(delta_11) @ beta_x)
    var_y_a = var_y + float(beta_y @ np.atleast_2d(delta_22) @ beta_y)
    if var_x_a <= 0 or var_y_a <= 0:
        msg = f"Conditional variances {var_x_a:.6g} and {var_y_a:.6g} must be positive."
        raise DegenerateConditioningError(msg)
    return numerator / math.sqrt(var_x_a * var_y_a)


def ecc_population(params: CorrelationParams) -> float:
    """Return the conditional correlation implied by unconditional correlations and a variance shift."""  # noqa: E501
    return ecc_formula(
        params.rho_xy,
        1.0,
        1.0,
        np.array([params.rho_xz]),
        np.array([params.rho_yz]),
        np.array([[params.delta]]),
        np.array([[params.delta]]),
        np.array([[params.delta]]),
    )


def partial_correlation(rho_xy: float, rho_xz: float, rho_yz: float) -> float:
    """Return the partial correlation of X and Y given a scalar Z."""
    denominator = (1 - rho_xz**2) * (1 - rho_yz**2)
    if denominator <= 0:
        msg = "Partial correlation is undefined when Z is perfectly correlated with X or Y."  # noqa: E501
        raise DegenerateConditioningError(msg)
    return (rho_xy - rho_xz * rho_yz) / math.sqrt(denominator)


def _conditioned_correlation(rho: float, delta: float) -> float:
    denominator = 1 + rho**2 * delta
    if denominator <= 0:
        msg = f"Denominator 1 + rho^2 delta = {denominator:.6g} must be positive."
        raise DegenerateConditioningError(msg)
    return rho * math.sqrt(1 + delta) / math.sqrt(denominator)


def condition_population(params: CorrelationParams) -> CorrelationParams:
    """Map unconditional correlations to their values under the event.

    The returned bundle carries ``var(Z) / var(Z | A) - 1`` as its delta, the
    shift leading back from A to the whole space.

    Raises:
        DegenerateConditioningError: If delta is -1.

    """
    if params.delta <= -1:
        msg = "Conditioning needs delta > -1; the event must not fix Z."
        raise DegenerateConditioningError(msg)
    return CorrelationParams(
        rho_xy=float(np.clip(ecc_population(params), -1.0, 1.0)),
        rho_xz=_conditioned_correlation(params.rho_xz, params.delta),
        rho_yz=_conditioned_correlation(params.rho_yz, params.delta),
        delta=1 / (1 + params.delta) - 1,
    )


def transport(conditional_params: CorrelationParams, delta_tilde: float) -> float:
    """Move a conditional correlation from event A to event A'.

    Args:
        conditional_params (CorrelationParams): Correlations under A; its delta is ignored.
        delta_tilde (float): ``var(Z | A') / var(Z | A) - 1``.

    Returns:
        float: The correlation of X and Y under A'.

    """  # noqa: E501
    return ecc_population(replace(conditional_params, delta=delta_tilde))


def implied_population(conditional_params: CorrelationParams) -> float:
    """Recover the unconditional correlation from correlations under A.

    The delta of ``conditional_params`` must be ``var(Z) / var(Z | A) - 1``, as
    returned by ``condition_population``.
    """
    return transport(conditional_params, conditional_params.delta)


def r_vector(
    conditional_correlations: np.ndarray,
    variance_ratios: np.ndarray,
) -> np.ndarray:
    """Recover unconditional correlations with each covariate from their values under A.

    Args:
        conditional_correlations (np.ndarray): Correlations of X with each covariate under A.
        variance_ratios (np.ndarray): ``var(Z_i | A) / var(Z_i)`` per covariate.

    Returns:
        np.ndarray: Unconditional correlations, one per covariate.

    Raises:
        DegenerateConditioningError: If a denominator is not positive.

    """  # noqa: E501
    r = np.asarray(conditional_correlations, dtype=float)
    shift = np.asarray(variance_ratios, dtype=float) - 1
    denominator = 1 + shift * (1 - r**2)
    if np.any(denominator <= 0) or not np.all(np.isfinite(denominator)):
        msg = f"R-vector denominators {denominator} must be positive."
        raise DegenerateConditioningError(msg)
    return r / np.sqrt(denominator)


def normalized_delta(
    delta: np.ndarray,
    cov_i: np.ndarray,
    cov_j: np.ndarray,
) -> np.ndarray:
    """Scale a block shift to correlation units.

    Returns ``D_i cov_i^-1 delta cov_j^-1 D_j`` with ``D`` the diagonal matrix of
    unconditional standard deviations.
    """
    cov_i = np.atleast_2d(cov_i)
    cov_j = np.atleast_2d(cov_j)
    left = np.sqrt(np.diag(cov_i))[:, np.newaxis] * np.linalg.inv(cov_i)
    right = np.linalg.inv(cov_j) * np.sqrt(np.diag(cov_j))[np.newaxis, :]
    return left @ np.atleast_2d(delta) @ right


def implied_formula(
    rho_a: float,
    r_x: np.ndarray,
    r_y: np.ndarray,
    delta_bar_11: np.ndarray,
    delta_bar_22: np.ndarray,
    delta_bar_12: np.ndarray,
) -> float:
    """Invert the conditioning identity in correlation units.

    Raises:
        DegenerateConditioningError: If a square-root argument is not positive.

    """
    scale_x = 1 + float(r_x @ delta_bar_11 @ r_x)
    scale_y = 1 + float(r_y @ delta_bar_22 @ r_y)
    if scale_x <= 0 or scale_y <= 0:
        msg = f"Variance scale factors {scale_x:.6g} and {scale_y:.6g} must be positive."  # noqa: E501
        raise DegenerateConditioningError(msg)
    return rho_a * math.sqrt(scale_x * scale_y) - float(r_x @ delta_bar_12 @ r_y)


def ecc_estimate(
    sample: Sample,
    event: EventSpec,
    strategy: DeltaStrategy = DeltaStrategy.EMPIRICAL,
    draws: int = 200_000,
    seed: int = 0,
) -> EccEstimate:
    """Estimate the correlation of X and Y under an event from the full sample.

    Unconditional moments of (X, Y) and the projections on Z1 and Z2 come from
    every row; only the covariate shift uses the event.

    Args:
        sample (Sample): Full sample with X, Y, Z1 and Z2 assigned.
        event (EventSpec): Event over covariate columns.
        strategy (DeltaStrategy, optional): Conditional moment source. Defaults to empirical.
        draws (int, optional): Rejection draws for the Gaussian model. Defaults to 200_000.
        seed (int, optional): Seed for the Gaussian model draws. Defaults to 0.

    Returns:
        EccEstimate: The corrected estimate, clamped to [-1, 1].

    """  # noqa: E501
    sample.require_roles()
    fit_x = ols_fit(sample, sample.x, sample.z1)
    fit_y = ols_fit(sample, sample.y, sample.z2)
    cov_xy, var_x, var_y = _pair_moments(sample.column(sample.x), sample.column(sample.y))  # noqa: E501
    union = sample.z_columns
    shift = delta_shift(sample, event, union, union, strategy, draws, seed)
    position = {name: k for k, name in enumerate(union)}
    i1 = [position[c] for c in sample.z1]
    i2 = [position[c] for c in sample.z2]
    raw = ecc_formula(
        cov_xy,
        var_x,
        var_y,
        fit_x.beta,
        fit_y.beta,
        shift.delta[np.ix_(i1, i1)],
        shift.delta[np.ix_(i2, i2)],
        shift.delta[np.ix_(i1, i2)],
    )
    rho, clamped = _clamp(raw, "Corrected")
    return EccEstimate(
        rho=rho,
        n_total=sample.n,
        n_event=round(shift.event_mass * sample.n),
        method=EstimateMethod.FULL_SAMPLE_CORRECTED,
        clamped=clamped,
    )


def ecc_subsample(sample: Sample, event: EventSpec) -> EccEstimate:
    """Return the ordinary correlation of X and Y over the rows satisfying the event.

    Raises:
        InsufficientEventSampleError: If fewer than 3 rows satisfy the event.
        DegenerateConditioningError: If X or Y is constant on those rows.

    """  # noqa: E501
    if sample.x is None or sample.y is None:
        msg = "Sample needs both X and Y roles assigned."
        raise ValueError(msg)
    subset = sample.subset(event_mask(sample, event))
    cov_xy, var_x, var_y = _pair_moments(subset.column(sample.x), subset.column(sample.y))  # noqa: E501
    if var_x * var_y <= 0:
        msg = "X or Y is constant on the event rows."
        raise DegenerateConditioningError(msg)
    rho, clamped = _clamp(cov_xy / math.sqrt(var_x * var_y), "Subsample")
    return EccEstimate(
        rho=rho,
        n_total=sample.n,
        n_event=subset.n,
        method=EstimateMethod.SUBSAMPLE,
        clamped=clamped,
    )


class MomentSource(Protocol):
    """Supplier of unconditional covariate moments for an A-sample."""

    def z_covariance(self, a_sample: Sample, columns: Sequence[str]) -> np.ndarray:
        """Return the unconditional covariance of the given covariate columns."""
        ...


@dataclass(frozen=True)
class AssertedMoments:
    """Unconditional covariate covariance known from outside the sample.

    Attributes:
        covariance (np.ndarray): Covariance matrix of ``columns``.
        columns (tuple[str, ...] | None): Column order of the matrix. Defaults to the
            sample's covariate union.

    """

    covariance: np.ndarray
    columns: tuple[str, ...] | None = None

    @classmethod
    def variance(cls, value: float, column: str | None = None) -> AssertedMoments:
        """Assert the variance of a single covariate."""
        if value <= 0:
            msg = "asserted variance must be positive"
            raise ValueError(msg)
        return cls(
            covariance=np.array([[float(value)]]),
            columns=None if column is None else (column,),
        )

    def z_covariance(self, a_sample: Sample, columns: Sequence[str]) -> np.ndarray:  # noqa: ARG002
        """Return the asserted covariance reordered to ``columns``."""
        covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        own = tuple(columns) if self.columns is None else self.columns
        if covariance.shape != (len(own), len(own)):
            msg = f"Asserted covariance has shape {covariance.shape}, expected {len(own)}x{len(own)}."  # noqa: E501
            raise DimensionMismatchError(msg)
        try:
            order = [own.index(c) for c in columns]
        except ValueError:
            msg = f"Asserted moments cover {own}, but {tuple(columns)} are needed."
            raise DimensionMismatchError(msg) from None
        return covariance[np.ix_(order, order)]


@dataclass(frozen=True)
class TruncatedMLE:
    """Unconditional covariate moments fitted by truncated Gaussian likelihood.

    Attributes:
        event (EventSpec): The event every row of the A-sample satisfies. Its
            bounds must be absolute numbers.
        max_iter (int): Optimizer iteration limit.
        gtol (float): Gradient-norm convergence threshold.

    """

    event: EventSpec
    max_iter: int = 500
    gtol: float = 1e-8

    def z_covariance(self, a_sample: Sample, columns: Sequence[str]) -> np.ndarray:
        """Fit the covariate block and return its unconditional covariance."""
        if not self.event.is_absolute:
            msg = f"Truncated likelihood needs absolute bounds; quantile band {self.event} depends on the unobserved sample."  # noqa: E501
            raise EventSpecError(msg)
        columns = tuple(columns)
        missing = [c for c in self.event.columns if c not in columns]
        if missing:
            msg = f"Event columns {missing} are not part of the covariate block {columns}."  # noqa: E501
            raise EventSpecError(msg)
        intervals = self.event.intervals()
        lower = np.array([intervals[c].lower if c in intervals else -math.inf for c in columns])  # noqa: E501
        upper = np.array([intervals[c].upper if c in intervals else math.inf for c in columns])  # noqa: E501
        fit = fit_truncated_gaussian(
            a_sample.block(columns),
            lower,
            upper,
            max_iter=self.max_iter,
            gtol=self.gtol,
        )
        return fit.covariance


def implied_unconditional(a_sample: Sample, moments: MomentSource) -> EccEstimate:
    """Estimate the unconditional correlation of X and Y from an A-sample.

    Every row of ``a_sample`` is assumed to satisfy the event. The projections
    of X on Z1 and Y on Z2 are fitted on the A-sample, where they keep their
    unconditional coefficients, and the conditional moments of (X, Y) are moved
    back to the whole space along the covariate shift: the unconditional
    covariance supplied by ``moments`` minus the conditional covariance of the
    A-sample.

    Args:
        a_sample (Sample): Rows observed under A, with X, Y, Z1 and Z2 assigned.
        moments (MomentSource): ``AssertedMoments`` or ``TruncatedMLE``.

    Returns:
        EccEstimate: The implied unconditional correlation, clamped to [-1, 1].

    Raises:
        DegenerateConditioningError: If X or Y is constant, or an implied variance is not positive.
        SingularDesignError: If a covariate block is rank deficient in the A-sample.
        OptimizationFailureError: If the truncated likelihood fit does not converge.

    """  # noqa: E501
    a_sample.require_roles()
    fit_x = ols_fit(a_sample, a_sample.x, a_sample.z1)
    fit_y = ols_fit(a_sample, a_sample.y, a_sample.z2)
    cov_xy, var_x, var_y = _pair_moments(a_sample.column(a_sample.x), a_sample.column(a_sample.y))  # noqa: E501
    if var_x == 0 or var_y == 0:
        msg = "X or Y is constant in the A-sample."
        raise DegenerateConditioningError(msg)

    union = a_sample.z_columns
    conditional = _covariance(a_sample.block(union))
    unshift = moments.z_covariance(a_sample, union) - conditional
    position = {name: k for k, name in enumerate(union)}
    i1 = [position[c] for c in a_sample.z1]
    i2 = [position[c] for c in a_sample.z2]
    raw = ecc_formula(
        cov_xy,
        var_x,
        var_y,
        fit_x.beta,
        fit_y.beta,
        unshift[np.ix_(i1, i1)],
        unshift[np.ix_(i2, i2)],
        unshift[np.ix_(i1, i2)],
    )
    rho, clamped = _clamp(raw, "Implied unconditional")
    return EccEstimate(
        rho=rho,
        n_total=a_sample.n,
        n_event=a_sample.n,
        method=EstimateMethod.IMPLIED_UNCONDITIONAL,
        clamped=clamped,
    )


def assumption_diagnostics(sample: Sample, event: EventSpec) -> AssumptionDiagnostics:
    """Measure how far the sample departs from the moment assumptions under an event.

    Returns:
        AssumptionDiagnostics: ``a1_gap`` is the change of the residual covariance under A,
        ``a2_gap`` the covariance between projections and the other residual under A, and
        ``bias_bound_scale`` the spectral norm of the Z1-Z2 covariance shift.

    """  # noqa: E501
    sample.require_roles()
    fit_x = ols_fit(sample, sample.x, sample.z1)
    fit_y = ols_fit(sample, sample.y, sample.z2)
    mask = event_mask(sample, event)
    count = int(mask.sum())
    if count < MIN_ROWS:
        raise InsufficientEventSampleError(count, MIN_ROWS)
    proj_x = sample.block(sample.z1) @ fit_x.beta
    proj_y = sample.block(sample.z2) @ fit_y.beta
    e_x, e_y = fit_x.residuals, fit_y.residuals

    full_residual, _, _ = _pair_moments(e_x, e_y)
    event_residual, _, _ = _pair_moments(e_x[mask], e_y[mask])
    cross_x, _, _ = _pair_moments(proj_x[mask], e_y[mask])
    cross_y, _, _ = _pair_moments(proj_y[mask], e_x[mask])
    shift = delta_shift(sample, event, sample.z1, sample.z2)
    return AssumptionDiagnostics(
        a1_gap=abs(event_residual - full_residual),
        a2_gap=abs(cross_x + cross_y),
        bias_bound_scale=float(np.linalg.norm(shift.delta, ord=2)),
    )


def covariance_shift(
    cov: np.ndarray,
    cov_a: np.ndarray,
    z_dim: int,
    rtol: float = 1e-8,
) -> CovarianceShift:
    """Decompose the covariance lost under an event.

    Args:
        cov (np.ndarray): Unconditional covariance.
        cov_a (np.ndarray): Conditional covariance under the event.
        z_dim (int): Dimension of the conditioning covariate block.
        rtol (float, optional): Singular values above ``rtol`` times the largest count
            toward the effective rank. Defaults to 1e-8.

    Returns:
        CovarianceShift: ``cov - cov_a``, its singular values (descending) and effective rank.

    Raises:
        DimensionMismatchError: If the matrices are not square of equal dimension.

    """  # noqa: E501
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    cov_a = np.atleast_2d(np.asarray(cov_a, dtype=float))
    if cov.shape != cov_a.shape or cov.shape[0] != cov.shape[1]:
        msg = f"Covariance shapes {cov.shape} and {cov_a.shape} must be equal and square."  # noqa: E501
        raise DimensionMismatchError(msg)
    if not (np.allclose(cov, cov.T) and np.allclose(cov_a, cov_a.T)):
        msg = "Covariance matrices must be symmetric"
        raise ValueError(msg)
    delta = cov - cov_a
    singular_values = np.linalg.svd(delta, compute_uv=False)
    largest = float(singular_values[0]) if singular_values.size else 0.0
    rank = 0 if largest == 0 else int(np.sum(singular_values > rtol * largest))
    return CovarianceShift(
        delta_matrix=delta,
        singular_values=singular_values,
        effective_rank=rank,
        z_dim=z_dim,
    )


def population_conditional_covariance(
    cov: np.ndarray,
    z_index: int,
    lower: float,
    upper: float,
) -> np.ndarray:
    """Return the covariance of a centered Gaussian vector given ``lower <= Z <= upper``.

    Only coordinate ``z_index`` is truncated; the result is ``cov`` plus a rank-one
    update along the regression of every coordinate on Z.
    """  # noqa: E501
    cov = np.asarray(cov, dtype=float)
    s = float(cov[z_index, z_index])
    _, var_a, _ = truncated_normal_moments(lower, upper, 0.0, math.sqrt(s))
    b = cov[:, z_index]
    return cov + np.outer(b, b) * (var_a - s) / s**2


def eigen_sweep(
    cov: np.ndarray,
    z_index: int,
    thresholds: Sequence[float],
) -> list[EigenSlice]:
    """Eigendecompose the non-Z block of the conditional covariance under ``Z > z``.

    Args:
        cov (np.ndarray): Unconditional covariance of a centered Gaussian vector.
        z_index (int): Position of the conditioning coordinate.
        thresholds (Sequence[float]): Values of z.

    Returns:
        list[EigenSlice]: Eigenvalues (descending) and matching eigenvectors per threshold.

    """  # noqa: E501
    keep = [k for k in range(np.asarray(cov).shape[0]) if k != z_index]
    slices = []
    for threshold in thresholds:
        conditional = population_conditional_covariance(cov, z_index, threshold, math.inf)  # noqa: E501
        values, vectors = np.linalg.eigh(conditional[np.ix_(keep, keep)])
        order = np.argsort(values)[::-1]
        slices.append(EigenSlice(float(threshold), values[order], vectors[:, order]))
    return slices
