"""Tests for dependence tests on an A-sample.

This module verifies that:
  - Hoeffding's D equals 1 for a monotone relationship.
  - Pearson, Spearman and Kendall statistics agree with scipy.
  - Permutation p-values are minimal for perfect dependence and calibrated under independence.
  - Rank-based results are invariant to monotone transformations of Y.
  - Undefined statistics are reported with an error instead of a p-value.
  - On a model with zero partial correlation given Z, the implied test detects
    the dependence on the outer decile bands while the baselines stay silent,
    and interior bands show almost no correlation although the implied value
    is still rho_xy.
  - The implied test always uses permutations, and a permuted statistic that
    fails does not abort the run.

Usage:
    python -m pytest tests/test_deptest.py
"""  # noqa: E501

import logging

import numpy as np
import pytest
from scipy import stats

from event_conditional_correlation import deptest
from event_conditional_correlation.deptest import (
    DependenceTest,
    PValueMethod,
    hoeffding_d,
    kendall,
    pearson,
    results_frame,
    run_tests,
    spearman,
)
from event_conditional_correlation.estimators import condition_population, implied_population
from event_conditional_correlation.events import EventSpec, decile_sweep, event_mask
from event_conditional_correlation.exceptions import (
    InsufficientEventSampleError,
    UndefinedStatisticError,
)
from event_conditional_correlation.sample import Sample
from event_conditional_correlation.synth import GenSpec, generate, oracle_ecc
from event_conditional_correlation.truncated import truncated_normal_moments

RANK_TESTS = (DependenceTest.SPEARMAN, DependenceTest.KENDALL, DependenceTest.HOEFFDING)
OPPOSING = GenSpec(rho_xy=-0.25, rho_xz=-0.5, rho_yz=0.5, n=5000, seed=7)


def _pair_sample(x: np.ndarray, y: np.ndarray, seed: int = 0) -> Sample:
    z = np.random.default_rng(seed).standard_normal(len(x))
    return Sample(np.column_stack([x, y, z]), ("x", "y", "z"), x="x", y="y", z1=("z",), z2=("z",))  # noqa: E501


def test_hoeffding_monotone() -> None:
    """Test that Hoeffding's D is 1 for a strictly monotone relationship."""
    x = np.linspace(-2.0, 2.0, 40)
    assert hoeffding_d(x, x**3) == pytest.approx(1.0, abs=1e-9)


def test_hoeffding_too_few_rows() -> None:
    """Test that fewer than five rows raise UndefinedStatisticError."""
    with pytest.raises(UndefinedStatisticError, match="at least 5"):
        hoeffding_d(np.arange(4.0), np.arange(4.0))


def test_statistics_match_scipy() -> None:
    """Test that the correlation statistics agree with scipy."""
    rng = np.random.default_rng(3)
    x = rng.standard_normal(60)
    y = 0.4 * x + rng.standard_normal(60)
    assert pearson(x, y) == pytest.approx(stats.pearsonr(x, y).statistic)
    assert spearman(x, y) == pytest.approx(stats.spearmanr(x, y).statistic)
    assert kendall(x, y) == pytest.approx(stats.kendalltau(x, y).statistic)


def test_perfect_dependence_minimal_p() -> None:
    """Test that Y = X gives the smallest attainable permutation p-value."""
    x = np.random.default_rng(1).standard_normal(50)
    tests = (DependenceTest.PEARSON, *RANK_TESTS)
    results = run_tests(_pair_sample(x, x), permutations=99, tests=tests, threads=2)
    assert [r.test for r in results] == list(tests)
    for result in results:
        assert result.p_value == pytest.approx(1 / 100)
        assert result.permutations == 99


def test_null_calibration() -> None:
    """Test that independent data reject at 5% in at most 12 of 100 replications."""
    rejections = {DependenceTest.PEARSON: 0, DependenceTest.SPEARMAN: 0}
    for rep in range(100):
        rng = np.random.default_rng([42, rep])
        sample = _pair_sample(rng.standard_normal(30), rng.standard_normal(30), seed=rep)
        for result in run_tests(sample, permutations=99, seed=rep, tests=tuple(rejections), threads=1):  # noqa: E501
            rejections[result.test] += int(result.p_value <= 0.05)
    assert all(count <= 12 for count in rejections.values())


def test_rank_tests_invariant_to_monotone_maps() -> None:
    """Test that rank-based results do not change when Y is replaced by exp(Y)."""
    rng = np.random.default_rng(8)
    x = rng.standard_normal(40)
    y = 0.3 * x + rng.standard_normal(40)
    plain = run_tests(_pair_sample(x, y), permutations=99, seed=2, tests=RANK_TESTS, threads=1)  # noqa: E501
    mapped = run_tests(_pair_sample(x, np.exp(y)), permutations=99, seed=2, tests=RANK_TESTS, threads=1)  # noqa: E501
    assert [(r.statistic, r.p_value) for r in plain] == [(r.statistic, r.p_value) for r in mapped]  # noqa: E501


def test_too_few_rows() -> None:
    """Test that A-samples below 20 rows raise InsufficientEventSampleError."""
    x = np.arange(19.0)
    with pytest.raises(InsufficientEventSampleError):
        run_tests(_pair_sample(x, x), permutations=9)


def test_undefined_statistic_reported(caplog: pytest.LogCaptureFixture) -> None:
    """Test that a constant X yields errors instead of p-values and logs them."""
    y = np.random.default_rng(5).standard_normal(30)
    tests = (DependenceTest.PEARSON, DependenceTest.SPEARMAN, DependenceTest.HOEFFDING)
    with caplog.at_level(logging.ERROR):
        results = run_tests(_pair_sample(np.ones(30), y), permutations=19, tests=tests)
    assert all(r.p_value is None and r.statistic is None for r in results)
    assert all(r.error for r in results)
    assert "statistic is undefined" in caplog.text
    frame = results_frame(results)
    assert list(frame.columns) == ["test", "statistic", "p_value", "method", "permutations", "error"]  # noqa: E501


def test_asymptotic_p_values() -> None:
    """Test that asymptotic Pearson p-values match scipy while Hoeffding stays permutation based."""  # noqa: E501
    rng = np.random.default_rng(9)
    x = rng.standard_normal(80)
    y = 0.2 * x + rng.standard_normal(80)
    results = run_tests(
        _pair_sample(x, y),
        permutations=49,
        tests=(DependenceTest.PEARSON, DependenceTest.HOEFFDING),
        p_method=PValueMethod.ASYMPTOTIC,
        threads=1,
    )
    by_test = {r.test: r for r in results}
    assert by_test[DependenceTest.PEARSON].p_value == pytest.approx(stats.pearsonr(x, y).pvalue)  # noqa: E501
    assert by_test[DependenceTest.PEARSON].method is PValueMethod.ASYMPTOTIC
    assert by_test[DependenceTest.PEARSON].permutations == 0
    assert by_test[DependenceTest.HOEFFDING].method is PValueMethod.PERMUTATION


def test_decile_bands_of_opposing_model() -> None:
    """Test the five tests on all ten decile bands of the opposing model.

    Each band holds 500 of the 5,000 rows. The implied test rejects on both
    outer bands with a negative statistic, and each baseline fails to reject
    on at least 8 of the 10 bands.
    """
    sample = generate(OPPOSING)
    rejections = dict.fromkeys(DependenceTest, 0)
    outer = {}
    for upper, band in decile_sweep(sample):
        a_sample = sample.subset(event_mask(sample, band))
        assert a_sample.n == 500
        results = run_tests(a_sample, sigma_z=1.0, permutations=199, seed=1, threads=2)
        for result in results:
            assert result.p_value is not None
            rejections[result.test] += int(result.p_value < 0.05)
        if upper in (0.1, 1.0):
            outer[upper] = results[0]
    for result in outer.values():
        assert result.test is DependenceTest.ECC_IMPLIED
        assert result.statistic < 0
        assert result.p_value < 0.05
    assert rejections[DependenceTest.ECC_IMPLIED] >= 2
    for test in (DependenceTest.PEARSON, *RANK_TESTS):
        assert rejections[test] <= 2


@pytest.mark.parametrize("upper_quantile", [0.2, 0.5, 0.9])
def test_interior_bands_hide_the_dependence(upper_quantile: float) -> None:
    """Test that interior bands show almost no correlation while the implied value stays at rho_xy."""  # noqa: E501
    band = EventSpec.band("z", upper_quantile, 0.1)
    oracle = oracle_ecc(OPPOSING, band)
    assert abs(oracle.value) < 0.05
    lower, upper = (float(stats.norm.ppf(q)) for q in (upper_quantile - 0.1, upper_quantile))  # noqa: E501
    _, variance, _ = truncated_normal_moments(lower, upper)
    conditional = condition_population(OPPOSING.params(variance - 1))
    assert abs(conditional.rho_xy) < 0.05
    assert implied_population(conditional) == pytest.approx(-0.25, abs=1e-10)


def test_implied_test_ignores_asymptotic_request() -> None:
    """Test that the implied test stays permutation based when asymptotic p-values are requested."""  # noqa: E501
    sample = generate(OPPOSING)
    a_sample = sample.subset(event_mask(sample, EventSpec.band("z", 1.0, 0.1)))
    (result,) = run_tests(
        a_sample,
        permutations=49,
        tests=(DependenceTest.ECC_IMPLIED,),
        p_method=PValueMethod.ASYMPTOTIC,
        threads=1,
    )
    assert result.method is PValueMethod.PERMUTATION
    assert result.permutations == 49


def test_failing_permutation_does_not_abort(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test that a ValueError in a permuted statistic is recorded as missing instead of aborting the run."""  # noqa: E501
    calls = []

    def flaky(x: np.ndarray, y: np.ndarray) -> float:
        calls.append(len(x))
        if len(calls) > 1:
            msg = "rho must lie in [-1, 1], got nan"
            raise ValueError(msg)
        return float(np.corrcoef(x, y)[0, 1])

    monkeypatch.setattr(deptest, "pearson", flaky)
    x = np.random.default_rng(4).standard_normal(30)
    (result,) = run_tests(_pair_sample(x, x), permutations=19, tests=(DependenceTest.PEARSON,), threads=1)  # noqa: E501
    assert result.statistic == pytest.approx(1.0)
    assert result.p_value == pytest.approx(1 / 20)
    assert len(calls) == 20
