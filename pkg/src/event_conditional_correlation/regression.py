"""Piecewise affine regression from per-bin event conditional correlations.

The support of X is cut into bins ``A_i``. On each bin the correlation of X
and Y given ``X in A_i`` is estimated from the full sample with X itself as
the covariate, and turned into a slope ``rho_i * sd(Y | A_i) / sd(X | A_i)``.
The fit is

    f(x) = m_i + slope_i * (x - m'_i)    for x in A_i

with ``(m_i, m'_i)`` the conditional means of (Y, X) on the bin.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np

from .estimators import ecc_estimate
from .events import EventSpec
from .exceptions import BinMergeError
from .parallel import map_ordered

if TYPE_CHECKING:
    from .sample import Sample

_LOGGER = logging.getLogger(__name__)

MIN_OCCUPANCY = 10


class Binning(str, Enum):
    """How the X support is cut into bins."""

    EQUAL_WIDTH = "equal-width"
    EQUAL_COUNT = "equal-count"


@dataclass(frozen=True)
class AffinePiece:
    """The affine piece fitted on one bin ``[lower, upper)``.

    Attributes:
        lower (float): Left bin edge, included.
        upper (float): Right bin edge, excluded.
        mean_y (float): Conditional mean of Y on the bin.
        mean_x (float): Conditional mean of X on the bin.
        slope (float): Regression slope on the bin.
        rho (float): Event conditional correlation of X and Y on the bin.
        count (int): Rows falling into the bin.

    """

    lower: float
    upper: float
    mean_y: float
    mean_x: float
    slope: float
    rho: float
    count: int

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the affine piece."""
        return self.mean_y + self.slope * (np.asarray(x, dtype=float) - self.mean_x)


@dataclass(frozen=True)
class PiecewiseAffineFit:
    """A fitted piecewise affine function.

    Attributes:
        pieces (tuple[AffinePiece, ...]): Pieces ordered by bin, adjacent and disjoint.
        binning (Binning): Binning rule used.
        merges (int): Number of under-occupied bins merged into a neighbour.

    """  # noqa: E501

    pieces: tuple[AffinePiece, ...]
    binning: Binning = Binning.EQUAL_WIDTH
    merges: int = 0

    @property
    def edges(self) -> np.ndarray:
        """Bin edges, one more than the number of pieces."""
        return np.array([p.lower for p in self.pieces] + [self.pieces[-1].upper])

    @property
    def slopes(self) -> np.ndarray:
        """Slopes per bin."""
        return np.array([p.slope for p in self.pieces])

    def to_dict(self) -> dict[str, Any]:
        """Return a JSON-serializable description of the fit."""
        return {
            "binning": self.binning.value,
            "merges": self.merges,
            "bins": [
                {
                    "lower": p.lower,
                    "upper": p.upper,
                    "mean_x": p.mean_x,
                    "mean_y": p.mean_y,
                    "slope": p.slope,
                    "rho": p.rho,
                    "count": p.count,
                }
                for p in self.pieces
            ],
        }


def _assign(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return np.searchsorted(edges, values, side="right") - 1


def bin_edges(
    x: np.ndarray,
    n_bins: int,
    binning: Binning = Binning.EQUAL_WIDTH,
) -> np.ndarray:
    """Cut the observed range of x into bins.

    The last edge lies just above the maximum so that every observation falls
    into a half-open bin ``[edge_k, edge_k+1)``.

    Raises:
        ValueError: If fewer than two bins are requested.
        BinMergeError: If the data cannot support two bins.

    """
    if n_bins < 2:  # noqa: PLR2004
        msg = "n_bins must be at least 2"
        raise ValueError(msg)
    x = np.asarray(x, dtype=float)
    low, high = float(x.min()), float(x.max())
    if low == high:
        msg = "X is constant; no bins can be formed."
        raise BinMergeError(msg)
    if Binning(binning) is Binning.EQUAL_WIDTH:
        edges = np.linspace(low, high, n_bins + 1)
    else:
        edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1)))
    edges[-1] = np.nextafter(high, math.inf)
    if len(edges) < 3:  # noqa: PLR2004
        msg = "Ties in X leave fewer than two bins."
        raise BinMergeError(msg)
    return edges


def merge_sparse_bins(
    x: np.ndarray,
    edges: np.ndarray,
    min_occupancy: int = MIN_OCCUPANCY,
) -> tuple[np.ndarray, int]:
    """Merge every bin holding fewer than ``min_occupancy`` rows into its smaller neighbour.

    Returns:
        tuple[np.ndarray, int]: The remaining edges and the number of merges.

    Raises:
        BinMergeError: If merging leaves fewer than two bins.

    """  # noqa: E501
    edges = np.asarray(edges, dtype=float).copy()
    merges = 0
    while True:
        counts = np.bincount(_assign(x, edges), minlength=len(edges) - 1)
        sparse = np.flatnonzero(counts < min_occupancy)
        if sparse.size == 0:
            return edges, merges
        if len(counts) <= 2:  # noqa: PLR2004
            msg = f"Bins with counts {counts.tolist()} cannot reach {min_occupancy} rows each without collapsing below two bins."  # noqa: E501
            raise BinMergeError(msg)
        k = int(sparse[np.argmin(counts[sparse])])
        if k == 0:
            drop = 1
        elif k == len(counts) - 1:
            drop = k
        else:
            drop = k if counts[k - 1] <= counts[k + 1] else k + 1
        msg = f"Merging bin [{edges[k]:.6g}, {edges[k + 1]:.6g}) holding {counts[k]} rows into its neighbour"  # noqa: E501
        _LOGGER.warning(msg)
        edges = np.delete(edges, drop)
        merges += 1


def fit_piecewise(
    sample: Sample,
    n_bins: int = 20,
    binning: Binning = Binning.EQUAL_WIDTH,
    min_occupancy: int = MIN_OCCUPANCY,
    threads: int | None = None,
) -> PiecewiseAffineFit:
    """Fit the piecewise affine regression of Y on X.

    Args:
        sample (Sample): Sample with X and Y roles assigned; Z roles are ignored.
        n_bins (int, optional): Number of bins before merging. Defaults to 20.
        binning (Binning, optional): Equal-width or equal-count bins. Defaults to equal-width.
        min_occupancy (int, optional): Minimum rows per retained bin. Defaults to 10.
        threads (int | None, optional): Worker threads for the per-bin fits. Defaults to the logical core count.

    Returns:
        PiecewiseAffineFit: The fit.

    Raises:
        BinMergeError: If fewer than two bins survive merging.

    """  # noqa: E501
    if sample.x is None or sample.y is None:
        msg = "Sample needs both X and Y roles assigned."
        raise ValueError(msg)
    binning = Binning(binning)
    roled = sample.with_roles(z1=(sample.x,), z2=(sample.x,))
    x = roled.column(roled.x)
    y = roled.column(roled.y)
    edges, merges = merge_sparse_bins(x, bin_edges(x, n_bins, binning), min_occupancy)
    labels = _assign(x, edges)

    def fit_bin(k: int) -> AffinePiece:
        inside = labels == k
        x_bin, y_bin = x[inside], y[inside]
        sd_x = float(np.std(x_bin, ddof=1))
        sd_y = float(np.std(y_bin, ddof=1))
        if sd_y == 0:
            rho, slope = 0.0, 0.0
        else:
            event = EventSpec.rectangle({roled.x: (float(edges[k]), float(edges[k + 1]))})  # noqa: E501
            rho = ecc_estimate(roled, event).rho
            slope = rho * sd_y / sd_x
        return AffinePiece(
            lower=float(edges[k]),
            upper=float(edges[k + 1]),
            mean_y=float(y_bin.mean()),
            mean_x=float(x_bin.mean()),
            slope=slope,
            rho=rho,
            count=int(inside.sum()),
        )

    pieces = map_ordered(fit_bin, range(len(edges) - 1), threads)
    msg = f"Fitted {len(pieces)} affine pieces ({merges} merges)"
    _LOGGER.info(msg)
    return PiecewiseAffineFit(pieces=tuple(pieces), binning=binning, merges=merges)


def predict(fit: PiecewiseAffineFit, x: float | Sequence[float] | np.ndarray) -> Any:  # noqa: ANN401
    """Evaluate the fit.

    Points outside the fitted range are evaluated on the nearest bin's affine
    piece and reported in a warning.

    Returns:
        float | np.ndarray: A float for scalar input, otherwise an array.

    """
    values = np.atleast_1d(np.asarray(x, dtype=float))
    edges = fit.edges
    outside = (values < edges[0]) | (values >= edges[-1])
    if outside.any():
        msg = f"{int(outside.sum())} points lie outside the fitted range [{edges[0]:.6g}, {edges[-1]:.6g}) and are extrapolated"  # noqa: E501
        _LOGGER.warning(msg)
    index = np.clip(_assign(values, edges), 0, len(fit.pieces) - 1)
    slopes = fit.slopes
    mean_x = np.array([p.mean_x for p in fit.pieces])
    mean_y = np.array([p.mean_y for p in fit.pieces])
    result = mean_y[index] + slopes[index] * (values - mean_x[index])
    if np.ndim(x) == 0:
        return float(result[0])
    return result


def rmse(
    fit: PiecewiseAffineFit,
    truth: Callable[[np.ndarray], np.ndarray],
    grid: Sequence[float] | np.ndarray,
) -> float:
    """Return the root mean squared deviation of the fit from a function on a grid."""
    grid = np.asarray(grid, dtype=float)
    return float(np.sqrt(np.mean((predict(fit, grid) - truth(grid)) ** 2)))
