"""Tests for the Monte Carlo RMSE harness.

This module verifies that:
  - Studies report one finite RMSE per method and sample size.
  - On Gaussian panels the proposed estimator beats the subsample estimator at
    every n and its RMSE falls at a log-log slope between -0.65 and -0.35.
  - On Student-t and chi-square mixture panels it beats the subsample
    estimator from n = 500 on.
  - The implied-unconditional task recovers rho_xy far better than band
    subsamples and improves at the same rate.
  - Results do not depend on the thread count.
  - Invalid study specifications and excessive cell failures are rejected.

Usage:
    python -m pytest tests/test_mc_harness.py
"""

import math

import numpy as np
import pytest

from event_conditional_correlation import mc_harness
from event_conditional_correlation.exceptions import DegenerateConditioningError, StudyFailureError  # noqa: E501
from event_conditional_correlation.mc_harness import (
    MomentChoice,
    StudyMethod,
    StudySpec,
    Task,
    derived_seed,
    loglog_slope,
    run_study,
)
from event_conditional_correlation.synth import Family, GenSpec

GEN = GenSpec(rho_xy=0.3, rho_xz=0.6, rho_yz=0.5)
SIZES = (250, 500, 1000, 2000)
GAUSSIAN_PANELS = (
    GenSpec(rho_xy=0.2, rho_xz=0.4, rho_yz=0.6, eta=1.0),
    GenSpec(rho_xy=0.6, rho_xz=0.7, rho_yz=0.8, eta=1.0),
)
HEAVY_TAILED_PANELS = (
    GenSpec(family=Family.STUDENT_T, rho_xy=0.2, rho_xz=0.4, rho_yz=0.6, eta=5.0),
    GenSpec(family=Family.CHISQ_MIXTURE, rho_xy=0.2, rho_xz=0.4, rho_yz=0.6, eta=5.0),
)


def test_curve_study_rows() -> None:
    """Test that a curve study reports every (method, n) pair with a finite RMSE."""
    spec = StudySpec(gen=GEN, sample_sizes=(200, 800), replications=40, width=0.25, threads=2)  # noqa: E501
    result = run_study(spec)
    assert len(result.rows) == 4
    assert len(result.oracle) == 4
    assert all(math.isfinite(row.rmse) and row.rmse > 0 for row in result.rows)
    proposed = result.rmse(StudyMethod.PROPOSED)
    subsample = result.rmse(StudyMethod.SUBSAMPLE)
    assert proposed[1] < proposed[0]
    assert np.all(proposed < subsample)


@pytest.mark.parametrize("gen", GAUSSIAN_PANELS, ids=["theta-0.2-0.4-0.6", "theta-0.6-0.7-0.8"])
def test_gaussian_panels_rate_and_dominance(gen: GenSpec) -> None:
    """Test that the proposed RMSE is below the subsample RMSE at every n and falls at the root-n rate."""  # noqa: E501
    result = run_study(StudySpec(gen=gen, sample_sizes=SIZES, replications=200, seed=3))
    proposed = result.rmse(StudyMethod.PROPOSED)
    subsample = result.rmse(StudyMethod.SUBSAMPLE)
    assert np.all(proposed < subsample)
    assert np.all(np.diff(proposed) < 0)
    assert -0.65 <= loglog_slope(result) <= -0.35


@pytest.mark.parametrize("gen", HEAVY_TAILED_PANELS, ids=["student-t", "chisq-mixture"])
def test_heavy_tailed_panels_dominate_from_500(gen: GenSpec) -> None:
    """Test that on heavy-tailed panels the proposed RMSE is below the subsample RMSE for n >= 500."""  # noqa: E501
    spec = StudySpec(gen=gen, sample_sizes=SIZES, replications=50, oracle_draws=2_000_000, seed=5)  # noqa: E501
    result = run_study(spec)
    assert all(math.isfinite(v) for v in result.oracle)
    proposed = result.rmse(StudyMethod.PROPOSED)
    subsample = result.rmse(StudyMethod.SUBSAMPLE)
    assert np.all(proposed[1:] < subsample[1:])


def test_study_frame() -> None:
    """Test that the study frame has the documented columns and theta label."""
    spec = StudySpec(gen=GEN, sample_sizes=(100, 200), replications=3, width=0.5, seed=4)  # noqa: E501
    frame = run_study(spec).to_frame()
    assert list(frame.columns) == ["family", "theta", "method", "n", "rmse", "replications", "seed"]  # noqa: E501
    assert set(frame["theta"]) == {"(0.3,0.6,0.5,1)"}
    assert set(frame["method"]) == {"proposed", "subsample"}
    assert set(frame["seed"]) == {4}


def test_study_independent_of_threads() -> None:
    """Test that the same seed gives identical RMSEs on one and four threads."""
    base = {"gen": GEN, "sample_sizes": (100, 300), "replications": 5, "width": 0.25, "seed": 12}  # noqa: E501
    single = run_study(StudySpec(**base, threads=1))
    pooled = run_study(StudySpec(**base, threads=4))
    np.testing.assert_array_equal(
        [row.rmse for row in single.rows],
        [row.rmse for row in pooled.rows],
    )


def test_implied_task() -> None:
    """Test that the implied task with asserted moments beats band subsample correlations."""  # noqa: E501
    spec = StudySpec(
        gen=GEN,
        sample_sizes=(2000,),
        replications=10,
        task=Task.IMPLIED_UNCONDITIONAL,
        width=0.5,
    )
    result = run_study(spec)
    assert result.oracle == (0.3, 0.3)
    proposed = result.rmse(StudyMethod.PROPOSED)[0]
    subsample = result.rmse(StudyMethod.SUBSAMPLE)[0]
    assert proposed < 0.1
    assert proposed < subsample / 2


def test_implied_task_rate() -> None:
    """Test that the implied-task RMSE on half-space bands falls at the root-n rate."""
    spec = StudySpec(
        gen=GEN,
        sample_sizes=SIZES,
        replications=100,
        methods=(StudyMethod.PROPOSED,),
        task=Task.IMPLIED_UNCONDITIONAL,
        width=0.5,
        seed=6,
    )
    result = run_study(spec)
    assert np.all(np.diff(result.rmse(StudyMethod.PROPOSED)) < 0)
    assert -0.65 <= loglog_slope(result) <= -0.35


def test_implied_task_with_mle() -> None:
    """Test that the implied task runs with truncated-likelihood moments."""
    spec = StudySpec(
        gen=GEN,
        sample_sizes=(2000,),
        replications=3,
        methods=(StudyMethod.PROPOSED,),
        task=Task.IMPLIED_UNCONDITIONAL,
        moments=MomentChoice.MLE,
        width=0.5,
    )
    result = run_study(spec)
    assert result.rmse(StudyMethod.PROPOSED)[0] < 0.2


def test_spec_validation() -> None:
    """Test that unordered sizes, zero replications and empty methods raise ValueError."""  # noqa: E501
    with pytest.raises(ValueError, match="strictly increasing"):
        StudySpec(gen=GEN, sample_sizes=(500, 250))
    with pytest.raises(ValueError, match="replications"):
        StudySpec(gen=GEN, replications=0)
    with pytest.raises(ValueError, match="method"):
        StudySpec(gen=GEN, methods=())
    assert StudySpec(gen=GEN, methods=("proposed",)).methods == (StudyMethod.PROPOSED,)


def test_derived_seed() -> None:
    """Test that derived seeds are deterministic and distinct across keys."""
    assert derived_seed(1, 2, 3) == derived_seed(1, 2, 3)
    assert derived_seed(1, 2, 3) != derived_seed(1, 2, 4)


def test_study_failure(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test that a method failing on every cell raises StudyFailureError."""

    def failing(*args: object, **kwargs: object) -> None:  # noqa: ARG001
        msg = "forced failure"
        raise DegenerateConditioningError(msg)

    monkeypatch.setattr(mc_harness, "ecc_subsample", failing)
    spec = StudySpec(gen=GEN, sample_sizes=(100,), replications=2, width=0.5, threads=1)
    with pytest.raises(StudyFailureError, match="failed"):
        run_study(spec)
