"""Tests for the piecewise affine regression.

This module verifies that:
  - The piecewise fit tracks a nonlinear function far better than one global line.
  - Equal-count binning gives bins of similar occupancy.
  - Under-occupied bins are merged with a warning, and impossible merges raise BinMergeError.
  - Predictions return floats for scalars and warn on extrapolation.

Usage:
    python -m pytest tests/test_regression.py
"""  # noqa: E501

import logging

import numpy as np
import pytest

from event_conditional_correlation.exceptions import BinMergeError
from event_conditional_correlation.regression import (
    Binning,
    PiecewiseAffineFit,
    bin_edges,
    fit_piecewise,
    merge_sparse_bins,
    predict,
    rmse,
)
from event_conditional_correlation.sample import Sample

GRID = np.linspace(-2.9, 2.9, 200)


@pytest.fixture(scope="module")
def tanh_sample() -> Sample:
    """Return 10,000 rows of y = tanh(x) + noise with x uniform on [-3, 3].

    Returns:
        Sample: Sample with X and Y roles.

    """
    rng = np.random.default_rng(17)
    x = rng.uniform(-3.0, 3.0, 10_000)
    y = np.tanh(x) + 0.1 * rng.standard_normal(x.size)
    return Sample(np.column_stack([x, y]), ("x", "y"), x="x", y="y")


@pytest.fixture(scope="module")
def tanh_fit(tanh_sample: Sample) -> PiecewiseAffineFit:
    """Return the 20-bin equal-width fit of the tanh sample.

    Returns:
        PiecewiseAffineFit: The fit.

    """
    return fit_piecewise(tanh_sample, n_bins=20, threads=2)


def test_tracks_nonlinear_function(tanh_sample: Sample, tanh_fit: PiecewiseAffineFit) -> None:  # noqa: E501
    """Test that the piecewise fit beats a single least-squares line on tanh."""
    assert len(tanh_fit.pieces) == 20
    assert tanh_fit.merges == 0
    assert rmse(tanh_fit, np.tanh, GRID) < 0.08
    slope, intercept = np.polyfit(tanh_sample.column("x"), tanh_sample.column("y"), 1)
    global_rmse = float(np.sqrt(np.mean((intercept + slope * GRID - np.tanh(GRID)) ** 2)))  # noqa: E501
    assert global_rmse > 0.15


def test_central_slopes_exceed_outer(tanh_fit: PiecewiseAffineFit) -> None:
    """Test that slopes near the origin exceed those in the flat tails."""
    slopes = tanh_fit.slopes
    central = slopes[9:11].mean()
    outer = np.abs(np.concatenate([slopes[:2], slopes[-2:]])).mean()
    assert central > outer


def test_pieces_are_adjacent(tanh_fit: PiecewiseAffineFit) -> None:
    """Test that bins are adjacent and cover every row."""
    edges = tanh_fit.edges
    assert np.all(np.diff(edges) > 0)
    assert sum(piece.count for piece in tanh_fit.pieces) == 10_000


def test_equal_count_bins(tanh_sample: Sample) -> None:
    """Test that equal-count bins hold nearly equal numbers of rows."""
    fit = fit_piecewise(tanh_sample, n_bins=8, binning=Binning.EQUAL_COUNT, threads=1)
    counts = [piece.count for piece in fit.pieces]
    assert fit.binning is Binning.EQUAL_COUNT
    assert max(counts) - min(counts) <= 2


def test_merge_sparse_bins(caplog: pytest.LogCaptureFixture) -> None:
    """Test that a sparse bin is merged into a neighbour with a warning."""
    x = np.concatenate([np.linspace(0.0, 0.99, 20), [1.5], np.linspace(2.0, 2.99, 20)])
    edges = np.array([0.0, 1.0, 2.0, 3.0])
    with caplog.at_level(logging.WARNING):
        merged, merges = merge_sparse_bins(x, edges, min_occupancy=10)
    assert merges == 1
    assert len(merged) == 3
    assert "Merging bin" in caplog.text


def test_constant_x() -> None:
    """Test that a constant X cannot be binned."""
    with pytest.raises(BinMergeError, match="constant"):
        bin_edges(np.ones(50), 4)


def test_merge_collapses() -> None:
    """Test that 15 rows cannot fill two bins of ten."""
    x = np.linspace(0.0, 1.0, 15)
    with pytest.raises(BinMergeError):
        merge_sparse_bins(x, bin_edges(x, 2), min_occupancy=10)


def test_too_few_bins() -> None:
    """Test that fewer than two bins raise ValueError."""
    with pytest.raises(ValueError, match="n_bins"):
        bin_edges(np.arange(10.0), 1)


def test_predict_scalar_and_extrapolation(
    tanh_fit: PiecewiseAffineFit,
    caplog: pytest.LogCaptureFixture,
) -> None:
    """Test that scalar predictions are floats and out-of-range points are reported."""
    value = predict(tanh_fit, 0.0)
    assert isinstance(value, float)
    assert abs(value) < 0.1
    with caplog.at_level(logging.WARNING):
        far = predict(tanh_fit, [5.0, -5.0])
    assert far.shape == (2,)
    assert "outside the fitted range" in caplog.text


def test_to_dict(tanh_fit: PiecewiseAffineFit) -> None:
    """Test that the dictionary form lists every bin."""
    described = tanh_fit.to_dict()
    assert described["binning"] == "equal-width"
    assert len(described["bins"]) == 20
    assert set(described["bins"][0]) == {"lower", "upper", "mean_x", "mean_y", "slope", "rho", "count"}  # noqa: E501


def test_constant_y_gives_flat_fit() -> None:
    """Test that a constant Y gives zero slopes and a constant prediction."""
    x = np.linspace(0.0, 1.0, 100)
    sample = Sample(np.column_stack([x, np.full(100, 2.0)]), ("x", "y"), x="x", y="y")
    fit = fit_piecewise(sample, n_bins=4, threads=1)
    np.testing.assert_array_equal(fit.slopes, 0.0)
    assert predict(fit, 0.3) == pytest.approx(2.0)
