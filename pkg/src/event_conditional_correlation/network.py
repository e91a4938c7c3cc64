"""Regime-split partial-correlation networks and eigenvector centrality.

A panel holds pre-whitened asset residuals and covariates. Splitting the rows
on a covariate quantile gives a stable and a crisis regime. Each regime's
correlation matrix is either used as observed (conditional on the regime),
corrected back to unconditional correlations with the covariates as the
conditioning block, or transported to a hypothetical covariate variance
(the counterfactual). Networks are partial correlations, and node importance
is the leading eigenvector of the absolute weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np
import pandas as pd

from .estimators import AssertedMoments, MomentSource, normalized_delta
from .events import EventSpec
from .exceptions import (
    DimensionMismatchError,
    EccError,
    EmptyRegimeError,
    InsufficientEventSampleError,
    MatrixCorrectionError,
    PowerIterationError,
    UnstableBootstrapError,
)
from .inference import percentile_interval
from .parallel import map_ordered
from .sample import Sample

if TYPE_CHECKING:
    from collections.abc import Sequence

_LOGGER = logging.getLogger(__name__)

MAX_FAILED_ENTRIES = 0.05
MAX_BOOTSTRAP_FAILURES = 0.10
CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8


class Regime(str, Enum):
    """Network regimes."""

    STABLE = "stable"
    CRISIS = "crisis"
    COUNTERFACTUAL = "counterfactual"


class CentralityMode(str, Enum):
    """How centrality handles negative partial correlations."""

    ABSOLUTE = "absolute"
    SIGNED_SPECTRAL = "signed-spectral"


@dataclass(frozen=True, eq=False)
class Panel:
    """Asset residuals and covariates observed on common dates.

    Attributes:
        residuals (np.ndarray): Matrix of shape (n, p), p >= 3.
        covariates (np.ndarray): Matrix of shape (n, q), q >= 1.
        assets (tuple[str, ...]): Asset labels.
        covariate_names (tuple[str, ...]): Covariate labels.
        dates (pd.DatetimeIndex | None): Row dates, when known.

    """

    residuals: np.ndarray
    covariates: np.ndarray
    assets: tuple[str, ...]
    covariate_names: tuple[str, ...]
    dates: pd.DatetimeIndex | None = None

    def __post_init__(self) -> None:
        """Validate shapes, labels and finiteness."""
        residuals = np.asarray(self.residuals, dtype=float)
        covariates = np.asarray(self.covariates, dtype=float)
        if covariates.ndim == 1:
            covariates = covariates[:, np.newaxis]
        if residuals.ndim != 2 or residuals.shape[1] < 3:  # noqa: PLR2004
            msg = "residuals must be an (n, p) matrix with p >= 3"
            raise DimensionMismatchError(msg)
        if covariates.shape[0] != residuals.shape[0] or covariates.shape[1] < 1:
            msg = "covariates must be an (n, q) matrix with q >= 1 and the same rows as residuals"  # noqa: E501
            raise DimensionMismatchError(msg)
        if len(self.assets) != residuals.shape[1] or len(self.covariate_names) != covariates.shape[1]:  # noqa: E501
            msg = "label counts must match the matrix columns"
            raise DimensionMismatchError(msg)
        if len(set(self.assets) | set(self.covariate_names)) != len(self.assets) + len(self.covariate_names):  # noqa: E501
            msg = "asset and covariate labels must be unique"
            raise ValueError(msg)
        if not (np.all(np.isfinite(residuals)) and np.all(np.isfinite(covariates))):
            msg = "panel contains missing or non-finite values"
            raise ValueError(msg)
        if self.dates is not None and len(self.dates) != residuals.shape[0]:
            msg = "dates must have one entry per row"
            raise DimensionMismatchError(msg)
        object.__setattr__(self, "residuals", residuals)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))

    @property
    def n(self) -> int:
        """Number of rows."""
        return int(self.residuals.shape[0])

    @property
    def p(self) -> int:
        """Number of assets."""
        return int(self.residuals.shape[1])

    @property
    def q(self) -> int:
        """Number of covariates."""
        return int(self.covariates.shape[1])

    def covariate(self, name: str | None = None) -> np.ndarray:
        """Return one covariate column, the first by default."""
        if name is None:
            return self.covariates[:, 0]
        try:
            return self.covariates[:, self.covariate_names.index(name)]
        except ValueError:
            msg = f"Unknown covariate {name!r}; available: {', '.join(self.covariate_names)}"  # noqa: E501
            raise KeyError(msg) from None

    def take(self, indices: np.ndarray) -> Panel:
        """Return the rows at the given positions, repetitions allowed."""
        indices = np.asarray(indices)
        return Panel(
            residuals=self.residuals[indices],
            covariates=self.covariates[indices],
            assets=self.assets,
            covariate_names=self.covariate_names,
            dates=None if self.dates is None else self.dates[indices],
        )

    def to_sample(self, mask: np.ndarray | None = None) -> Sample:
        """Return the (optionally masked) rows as a Sample with Z1 = Z2 = covariates."""  # noqa: E501
        data = np.hstack([self.residuals, self.covariates])
        if mask is not None:
            data = data[np.asarray(mask, dtype=bool)]
        return Sample(
            data=data,
            columns=(*self.assets, *self.covariate_names),
            z1=self.covariate_names,
            z2=self.covariate_names,
        )


@dataclass(frozen=True)
class RegimeSplit:
    """Row partition into stable and crisis regimes."""

    stable: np.ndarray
    crisis: np.ndarray
    threshold: float
    quantile: float
    covariate: str

    def mask(self, regime: Regime) -> np.ndarray:
        """Return the rows of a regime; the counterfactual starts from stable rows."""
        return self.crisis if regime is Regime.CRISIS else self.stable

    def event(self, regime: Regime) -> EventSpec:
        """Return the regime as an event on its covariate."""
        if regime is Regime.CRISIS:
            return EventSpec.above(self.covariate, self.threshold)
        return EventSpec.below(self.covariate, self.threshold)


@dataclass(frozen=True)
class CorrectedMatrix:
    """A regime correlation matrix corrected to unconditional correlations.

    Attributes:
        matrix (np.ndarray): Valid correlation matrix after symmetrizing and clipping.
        raw (np.ndarray): Entrywise corrected values before clipping.
        clip_magnitude (float): Spectral norm of the change made by clipping.
        failed_entries (int): Off-diagonal entries whose correction failed.

    """  # noqa: E501

    matrix: np.ndarray
    raw: np.ndarray
    clip_magnitude: float
    failed_entries: int = 0


@dataclass(frozen=True)
class Network:
    """Partial-correlation network.

    Attributes:
        weights (np.ndarray): Symmetric p x p partial correlations, zero diagonal.
        labels (tuple[str, ...]): Node labels.
        regime (Regime): Regime the network describes.
        ridge (float): Ridge added before inversion, 0 when none was needed.

    """

    weights: np.ndarray
    labels: tuple[str, ...]
    regime: Regime = Regime.STABLE
    ridge: float = 0.0

    def __post_init__(self) -> None:
        """Validate symmetry, range and labels."""
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:  # noqa: PLR2004
            msg = "weights must be a square matrix"
            raise DimensionMismatchError(msg)
        if len(self.labels) != weights.shape[0]:
            msg = "one label per node is required"
            raise DimensionMismatchError(msg)
        if not np.allclose(weights, weights.T) or np.any(np.abs(weights) > 1):
            msg = "weights must be symmetric with entries in [-1, 1]"
            raise ValueError(msg)
        if np.any(np.diag(weights) != 0):
            msg = "weights must have a zero diagonal"
            raise ValueError(msg)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "labels", tuple(self.labels))


@dataclass(frozen=True)
class CentralityStats:
    """Eigenvector centrality of a network.

    Attributes:
        scores (np.ndarray): Nonnegative scores with unit 1-norm.
        labels (tuple[str, ...]): Node labels.
        mean (float): Mean of the scores rescaled so that the largest is 1.
        sd (float): Standard deviation of the rescaled scores.
        eigenvalue (float): Rayleigh quotient of the scores.
        bootstrap (np.ndarray | None): Bootstrap draws of (mean, sd), shape (B, 2).

    """

    scores: np.ndarray
    labels: tuple[str, ...]
    mean: float
    sd: float
    eigenvalue: float
    bootstrap: np.ndarray | None = field(default=None)

    def interval(self, level: float = 0.95, statistic: str = "mean") -> tuple[float, float]:  # noqa: E501
        """Return the bootstrap percentile interval of the mean or sd."""
        if self.bootstrap is None:
            msg = "No bootstrap draws available"
            raise ValueError(msg)
        column = {"mean": 0, "sd": 1}[statistic]
        return percentile_interval(self.bootstrap[:, column], level)


def split_regimes(
    panel: Panel,
    quantile: float = 0.75,
    covariate: str | None = None,
) -> RegimeSplit:
    """Split rows on a covariate quantile.

    Crisis rows have the covariate at or above its type-7 empirical quantile;
    all other rows are stable. Quantile 0 puts every row in crisis.

    Raises:
        EmptyRegimeError: If a positive quantile leaves the stable regime empty.

    """
    if not 0 <= quantile <= 1:
        msg = "quantile must lie in [0, 1]"
        raise ValueError(msg)
    name = panel.covariate_names[0] if covariate is None else covariate
    values = panel.covariate(name)
    threshold = float(np.quantile(values, quantile))
    crisis = values >= threshold
    stable = ~crisis
    if quantile > 0 and not stable.any():
        msg = f"Quantile {quantile} of {name!r} leaves no stable rows."
        raise EmptyRegimeError(msg)
    msg = f"Regime split on {name} at {threshold:.6g}: {int(stable.sum())} stable, {int(crisis.sum())} crisis rows"  # noqa: E501
    _LOGGER.info(msg)
    return RegimeSplit(
        stable=stable,
        crisis=crisis,
        threshold=threshold,
        quantile=quantile,
        covariate=name,
    )


def conditional_correlation_matrix(panel: Panel, mask: np.ndarray | None = None) -> np.ndarray:  # noqa: E501
    """Return the residual correlation matrix over the selected rows."""
    rows = panel.residuals if mask is None else panel.residuals[np.asarray(mask, dtype=bool)]  # noqa: E501
    if rows.shape[0] < 3:  # noqa: PLR2004
        raise InsufficientEventSampleError(rows.shape[0])
    return np.corrcoef(rows, rowvar=False)


def nearest_correlation(matrix: np.ndarray, floor: float = 1e-8) -> tuple[np.ndarray, float]:  # noqa: E501
    """Symmetrize and, if needed, clip eigenvalues to produce a valid correlation matrix.

    Args:
        matrix (np.ndarray): Square matrix with unit diagonal.
        floor (float, optional): Smallest eigenvalue kept. Defaults to 1e-8.

    Returns:
        tuple[np.ndarray, float]: The correlation matrix and the spectral norm of the clipping change.

    """  # noqa: E501
    symmetric = (np.asarray(matrix, dtype=float) + np.asarray(matrix, dtype=float).T) / 2  # noqa: E501
    values, vectors = np.linalg.eigh(symmetric)
    if values[0] >= floor:
        result = symmetric.copy()
        np.fill_diagonal(result, 1.0)
        return result, 0.0
    clipped = vectors @ np.diag(np.maximum(values, floor)) @ vectors.T
    scale = np.sqrt(np.diag(clipped))
    clipped = clipped / np.outer(scale, scale)
    np.fill_diagonal(clipped, 1.0)
    magnitude = float(np.linalg.norm(clipped - symmetric, ord=2))
    msg = f"Clipped eigenvalues below {floor:g} (smallest was {values[0]:.3g}); change has spectral norm {magnitude:.3g}"  # noqa: E501
    _LOGGER.warning(msg)
    return clipped, magnitude


def _fill_failures(
    corrected: np.ndarray,
    fallback: np.ndarray,
    failed_assets: np.ndarray,
    label: str,
) -> tuple[np.ndarray, int]:
    p = corrected.shape[0]
    failed = np.zeros((p, p), dtype=bool)
    failed[failed_assets, :] = True
    failed[:, failed_assets] = True
    np.fill_diagonal(failed, val=False)
    failed |= ~np.isfinite(corrected)
    np.fill_diagonal(failed, val=False)
    count = int(failed.sum() // 2)
    total = p * (p - 1) // 2
    if count > MAX_FAILED_ENTRIES * total:
        msg = f"{label} failed on {count} of {total} entries."
        raise MatrixCorrectionError(msg)
    if count:
        msg = f"{label} failed on {count} of {total} entries; keeping their uncorrected values"  # noqa: E501
        _LOGGER.warning(msg)
    result = np.where(failed, fallback, corrected)
    np.fill_diagonal(result, 1.0)
    return result, count


def corrected_correlation_matrix(
    panel: Panel,
    mask: np.ndarray,
    moments: MomentSource | None = None,
) -> CorrectedMatrix:
    """Correct a regime's correlation matrix to unconditional correlations.

    Every asset pair is corrected with the covariates as the conditioning block.
    Unconditional covariate moments default to the full-panel covariance.

    Args:
        panel (Panel): The full panel.
        mask (np.ndarray): Rows of the regime.
        moments (MomentSource | None, optional): Unconditional covariate moments. Defaults to
            the full-panel covariance of the covariates.

    Returns:
        CorrectedMatrix: The corrected, symmetrized and clipped matrix.

    Raises:
        InsufficientEventSampleError: If the regime has fewer than q + 3 rows.
        MatrixCorrectionError: If more than 5% of the entries fail.

    """  # noqa: E501
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count < panel.q + 3:
        raise InsufficientEventSampleError(count, panel.q + 3)
    if moments is None:
        full = np.atleast_2d(np.cov(panel.covariates, rowvar=False))
        moments = AssertedMoments(full, panel.covariate_names)
    regime = panel.to_sample(mask)
    unconditional = moments.z_covariance(regime, panel.covariate_names)

    conditional = np.atleast_2d(np.cov(regime.data, rowvar=False))
    sd = np.sqrt(np.diag(conditional))
    correlation = conditional / np.outer(sd, sd)
    p = panel.p
    asset_corr = correlation[:p, :p]
    cross = correlation[:p, p:]
    cov_w = conditional[p:, p:]
    ratios = np.diag(cov_w) / np.diag(unconditional)

    denominators = 1 + (ratios[np.newaxis, :] - 1) * (1 - cross**2)
    bad = np.any(denominators <= 0, axis=1)
    r = cross / np.sqrt(np.where(denominators > 0, denominators, 1.0))
    delta_bar = normalized_delta(cov_w - unconditional, unconditional, unconditional)
    scales = 1 + np.einsum("ik,kl,il->i", r, delta_bar, r)
    bad |= scales <= 0
    root = np.sqrt(np.where(scales > 0, scales, 1.0))
    raw = asset_corr * np.outer(root, root) - r @ delta_bar @ r.T
    raw, failures = _fill_failures(raw, asset_corr, np.flatnonzero(bad), "Matrix correction")  # noqa: E501
    matrix, magnitude = nearest_correlation(raw)
    return CorrectedMatrix(
        matrix=matrix,
        raw=raw,
        clip_magnitude=magnitude,
        failed_entries=failures,
    )


def partial_correlation_network(
    correlation: np.ndarray,
    labels: Sequence[str] | None = None,
    regime: Regime = Regime.STABLE,
) -> Network:
    """Turn a correlation matrix into a partial-correlation network.

    Weights are ``-P_ij / sqrt(P_ii P_jj)`` with ``P`` the inverse matrix. A
    singular or ill-conditioned matrix gets a ridge of ``1e-8 trace / p``
    before inversion, reported in the network and logged.
    """
    correlation = np.asarray(correlation, dtype=float)
    p = correlation.shape[0]
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(p))
    ridge = 0.0
    if np.linalg.cond(correlation) > CONDITION_LIMIT:
        ridge = RIDGE_SCALE * float(np.trace(correlation)) / p
        msg = f"Correlation matrix is singular or ill-conditioned; adding ridge {ridge:.3g}"  # noqa: E501
        _LOGGER.warning(msg)
    precision = np.linalg.inv(correlation + ridge * np.eye(p))
    scale = np.sqrt(np.diag(precision))
    weights = np.clip(-precision / np.outer(scale, scale), -1.0, 1.0)
    weights = (weights + weights.T) / 2
    np.fill_diagonal(weights, 0.0)
    return Network(weights=weights, labels=labels, regime=regime, ridge=ridge)


def _moments(scores: np.ndarray) -> tuple[float, float]:
    rescaled = scores / scores.max()
    return float(rescaled.mean()), float(rescaled.std())


def eigenvector_centrality(
    network: Network,
    mode: CentralityMode = CentralityMode.ABSOLUTE,
    max_iter: int = 10_000,
    tol: float = 1e-10,
) -> CentralityStats:
    """Compute eigenvector centrality of a network.

    Args:
        network (Network): The network.
        mode (CentralityMode, optional): ``absolute`` runs power iteration on the absolute
            weights; ``signed-spectral`` takes the magnitudes of the leading eigenvector of the
            signed weights. Defaults to absolute.
        max_iter (int, optional): Power iteration limit. Defaults to 10_000.
        tol (float, optional): Power iteration tolerance. Defaults to 1e-10.

    Returns:
        CentralityStats: Scores with unit 1-norm and their moments.

    Raises:
        PowerIterationError: If power iteration does not converge.

    """  # noqa: E501
    weights = network.weights
    if CentralityMode(mode) is CentralityMode.SIGNED_SPECTRAL:
        values, vectors = np.linalg.eigh(weights)
        vector = np.abs(vectors[:, int(np.argmax(values))])
        matrix = weights
    else:
        matrix = np.abs(weights)
        graph = nx.from_numpy_array(matrix)
        try:
            found = nx.eigenvector_centrality(
                graph,
                max_iter=max_iter,
                tol=tol,
                weight="weight",
            )
        except nx.PowerIterationFailedConvergence as err:
            msg = f"Eigenvector centrality did not converge in {max_iter} iterations."
            raise PowerIterationError(msg) from err
        vector = np.array([found[i] for i in range(len(network.labels))])
    scores = vector / vector.sum()
    eigenvalue = float(scores @ matrix @ scores / (scores @ scores))
    mean, sd = _moments(scores)
    return CentralityStats(
        scores=scores,
        labels=network.labels,
        mean=mean,
        sd=sd,
        eigenvalue=eigenvalue,
    )


def counterfactual_shift(panel: Panel, split: RegimeSplit, delta_scale: float) -> float:
    """Return the normalized variance shift from the stable level to the hypothetical one.

    The hypothetical covariate variance is the stable variance increased by
    ``delta_scale`` times the crisis-minus-stable variance difference.
    """  # noqa: E501
    values = panel.covariate(split.covariate)
    stable_var = float(np.var(values[split.stable], ddof=1))
    crisis_var = float(np.var(values[split.crisis], ddof=1))
    if stable_var <= 0:
        msg = "The stable regime has a constant covariate."
        raise EmptyRegimeError(msg)
    return delta_scale * (crisis_var - stable_var) / stable_var


def counterfactual_correlation_matrix(
    panel: Panel,
    split: RegimeSplit,
    delta_scale: float,
) -> CorrectedMatrix:
    """Transport the stable correlations to a hypothetical covariate variance."""
    shift = counterfactual_shift(panel, split, delta_scale)
    regime = panel.residuals[split.stable]
    covariate = panel.covariate(split.covariate)[split.stable]
    correlation = np.corrcoef(np.column_stack([regime, covariate]), rowvar=False)
    p = panel.p
    asset_corr = correlation[:p, :p]
    cross = correlation[:p, p]
    scale = 1 + cross**2 * shift
    bad = scale <= 0
    root = np.sqrt(np.where(bad, 1.0, scale))
    raw = (asset_corr + np.outer(cross, cross) * shift) / np.outer(root, root)
    raw, failures = _fill_failures(raw, asset_corr, np.flatnonzero(bad), "Counterfactual transport")  # noqa: E501
    matrix, magnitude = nearest_correlation(raw)
    return CorrectedMatrix(
        matrix=matrix,
        raw=raw,
        clip_magnitude=magnitude,
        failed_entries=failures,
    )


def counterfactual_network(
    panel: Panel,
    split: RegimeSplit,
    delta_scale: float,
) -> Network:
    """Build the network the stable regime would show at the hypothetical variance."""
    corrected = counterfactual_correlation_matrix(panel, split, delta_scale)
    return partial_correlation_network(corrected.matrix, panel.assets, Regime.COUNTERFACTUAL)  # noqa: E501


def regime_network(
    panel: Panel,
    split: RegimeSplit,
    regime: Regime,
    corrected: bool = False,  # noqa: FBT001, FBT002
    delta_scale: float = 1.0,
    moments: MomentSource | None = None,
) -> Network:
    """Build the network of a regime.

    Args:
        panel (Panel): The full panel.
        split (RegimeSplit): The regime partition.
        regime (Regime): Regime to build.
        corrected (bool, optional): Correct stable and crisis matrices to unconditional
            correlations. Defaults to False.
        delta_scale (float, optional): Variance scale of the counterfactual. Defaults to 1.0.
        moments (MomentSource | None, optional): Covariate moments for the correction.
            Defaults to the full-panel covariance.

    Returns:
        Network: The partial-correlation network.

    """  # noqa: E501
    regime = Regime(regime)
    if regime is Regime.COUNTERFACTUAL:
        return counterfactual_network(panel, split, delta_scale)
    mask = split.mask(regime)
    if corrected:
        matrix = corrected_correlation_matrix(panel, mask, moments).matrix
    else:
        matrix, _ = nearest_correlation(conditional_correlation_matrix(panel, mask))
    return partial_correlation_network(matrix, panel.assets, regime)


def bootstrap_centrality(
    panel: Panel,
    split: RegimeSplit,
    regime: Regime,
    replicates: int = 200,
    seed: int = 0,
    corrected: bool = False,  # noqa: FBT001, FBT002
    delta_scale: float = 1.0,
    threads: int | None = None,
) -> CentralityStats:
    """Bootstrap the centrality mean and sd of a regime network.

    Stable and crisis rows are resampled separately, so every replicate keeps
    the regime sizes; replicate ``b`` uses ``default_rng([seed, b])``.

    Returns:
        CentralityStats: Point statistics of the original network with the bootstrap draws attached.

    Raises:
        UnstableBootstrapError: If more than 10% of replicates fail.

    """  # noqa: E501
    if replicates < 2:  # noqa: PLR2004
        msg = "replicates must be at least 2"
        raise ValueError(msg)
    regime = Regime(regime)
    point = eigenvector_centrality(
        regime_network(panel, split, regime, corrected, delta_scale),
    )
    stable_rows = np.flatnonzero(split.stable)
    crisis_rows = np.flatnonzero(split.crisis)

    def replicate(b: int) -> tuple[float, float] | None:
        rng = np.random.default_rng([seed, b])
        rows = np.concatenate(
            [
                rng.choice(stable_rows, size=stable_rows.size, replace=True),
                rng.choice(crisis_rows, size=crisis_rows.size, replace=True),
            ],
        )
        resampled = panel.take(rows)
        resplit = RegimeSplit(
            stable=np.arange(rows.size) < stable_rows.size,
            crisis=np.arange(rows.size) >= stable_rows.size,
            threshold=split.threshold,
            quantile=split.quantile,
            covariate=split.covariate,
        )
        try:
            network = regime_network(resampled, resplit, regime, corrected, delta_scale)  # noqa: E501
            stats = eigenvector_centrality(network)
        except EccError as err:
            msg = f"Centrality bootstrap replicate {b} failed: {err}"
            _LOGGER.debug(msg)
            return None
        return stats.mean, stats.sd

    results = map_ordered(replicate, range(replicates), threads)
    draws = [r for r in results if r is not None]
    failures = replicates - len(draws)
    if failures > MAX_BOOTSTRAP_FAILURES * replicates:
        raise UnstableBootstrapError(failures, replicates)
    msg = f"Centrality bootstrap for {regime.value}: {len(draws)} of {replicates} replicates"  # noqa: E501
    _LOGGER.info(msg)
    return CentralityStats(
        scores=point.scores,
        labels=point.labels,
        mean=point.mean,
        sd=point.sd,
        eigenvalue=point.eigenvalue,
        bootstrap=np.array(draws),
    )
