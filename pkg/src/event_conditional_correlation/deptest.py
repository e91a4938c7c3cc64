"""Bivariate dependence tests on an A-sample.

Five statistics are tested against zero:

- ``ecc-implied``: the implied unconditional correlation of X and Y, with the
  unconditional standard deviation of Z asserted from outside the sample.
- ``pearson``, ``spearman`` and ``kendall`` correlations.
- ``hoeffding``: Hoeffding's D.

P-values come from permutations of the Y rows against fixed (X, Z) pairs,
``p = (1 + #{|T_b| >= |T_obs|}) / (B + 1)``. Pearson, Spearman and Kendall
also have an asymptotic option; the implied correlation and Hoeffding's D
are always tested by permutation.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from scipy import stats

from .estimators import AssertedMoments, implied_unconditional
from .exceptions import EccError, InsufficientEventSampleError, UndefinedStatisticError
from .parallel import map_ordered
from .sample import Sample

if TYPE_CHECKING:
    from collections.abc import Sequence

_LOGGER = logging.getLogger(__name__)

MIN_ROWS = 20
HOEFFDING_MIN_ROWS = 5


class DependenceTest(str, Enum):
    """Dependence tests, in reporting order."""

    ECC_IMPLIED = "ecc-implied"
    PEARSON = "pearson"
    SPEARMAN = "spearman"
    KENDALL = "kendall"
    HOEFFDING = "hoeffding"


_PERMUTATION_ONLY = frozenset({DependenceTest.ECC_IMPLIED, DependenceTest.HOEFFDING})
_STATISTIC_ERRORS = (EccError, ValueError)


class PValueMethod(str, Enum):
    """How a p-value was computed."""

    PERMUTATION = "permutation"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class DependenceTestResult:
    """Outcome of one dependence test.

    Attributes:
        test (DependenceTest): The test.
        statistic (float | None): Observed statistic; None when undefined.
        p_value (float | None): P-value in [0, 1]; None when undefined.
        method (PValueMethod): How the p-value was computed.
        permutations (int): Permutations used; 0 for asymptotic p-values.
        error (str | None): Why the statistic is undefined.

    """

    test: DependenceTest
    statistic: float | None
    p_value: float | None
    method: PValueMethod = PValueMethod.PERMUTATION
    permutations: int = 0
    error: str | None = None

    def __post_init__(self) -> None:
        """Check the p-value range."""
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            msg = f"p-value {self.p_value} lies outside [0, 1]"
            raise ValueError(msg)


def _require_variation(*columns: np.ndarray) -> None:
    for values in columns:
        if np.ptp(values) == 0:
            msg = "A constant column has no defined correlation."
            raise UndefinedStatisticError(msg)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Return Pearson's correlation coefficient."""
    _require_variation(x, y)
    return float(np.corrcoef(x, y)[0, 1])


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Return Spearman's rank correlation."""
    _require_variation(x, y)
    return float(stats.spearmanr(x, y).statistic)


def kendall(x: np.ndarray, y: np.ndarray) -> float:
    """Return Kendall's tau-b."""
    _require_variation(x, y)
    return float(stats.kendalltau(x, y).statistic)


def hoeffding_d(x: np.ndarray, y: np.ndarray) -> float:
    """Return Hoeffding's D statistic of independence.

    Ties contribute half counts, so D is computed from mid-ranks. D lies in
    [-0.5, 1] and is 1 for a strictly monotone relationship.

    Raises:
        UndefinedStatisticError: If fewer than 5 rows are given or a column is constant.

    """  # noqa: E501
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < HOEFFDING_MIN_ROWS:
        msg = f"Hoeffding's D needs at least {HOEFFDING_MIN_ROWS} rows, got {n}."
        raise UndefinedStatisticError(msg)
    _require_variation(x, y)
    r = stats.rankdata(x)
    s = stats.rankdata(y)
    below_x = (r[np.newaxis, :] < r[:, np.newaxis]) + 0.5 * (r[np.newaxis, :] == r[:, np.newaxis])  # noqa: E501
    below_y = (s[np.newaxis, :] < s[:, np.newaxis]) + 0.5 * (s[np.newaxis, :] == s[:, np.newaxis])  # noqa: E501
    q = 1 + (below_x * below_y).sum(axis=1) - 0.25
    d1 = np.sum((q - 1) * (q - 2))
    d2 = np.sum((r - 1) * (r - 2) * (s - 1) * (s - 2))
    d3 = np.sum((r - 2) * (s - 2) * (q - 1))
    numerator = (n - 2) * (n - 3) * d1 + d2 - 2 * (n - 2) * d3
    return float(30 * numerator / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4)))


def _implied_statistic(sigma_z: float) -> Callable[[Sample], float]:
    moments = AssertedMoments.variance(sigma_z**2)

    def statistic(a_sample: Sample) -> float:
        return implied_unconditional(a_sample, moments).rho

    return statistic


def _statistics(sigma_z: float) -> dict[DependenceTest, Callable[[Sample], float]]:
    def pair(func: Callable[[np.ndarray, np.ndarray], float]) -> Callable[[Sample], float]:  # noqa: E501
        return lambda s: func(s.column(s.x), s.column(s.y))

    return {
        DependenceTest.ECC_IMPLIED: _implied_statistic(sigma_z),
        DependenceTest.PEARSON: pair(pearson),
        DependenceTest.SPEARMAN: pair(spearman),
        DependenceTest.KENDALL: pair(kendall),
        DependenceTest.HOEFFDING: pair(hoeffding_d),
    }


def _asymptotic_p(test: DependenceTest, a_sample: Sample) -> float | None:
    x, y = a_sample.column(a_sample.x), a_sample.column(a_sample.y)
    if test is DependenceTest.PEARSON:
        return float(stats.pearsonr(x, y).pvalue)
    if test is DependenceTest.SPEARMAN:
        return float(stats.spearmanr(x, y).pvalue)
    if test is DependenceTest.KENDALL:
        return float(stats.kendalltau(x, y).pvalue)
    return None


def _with_y(a_sample: Sample, order: np.ndarray) -> Sample:
    data = a_sample.data.copy()
    column = a_sample.index_of(a_sample.y)
    data[:, column] = data[order, column]
    return Sample(
        data=data,
        columns=a_sample.columns,
        x=a_sample.x,
        y=a_sample.y,
        z1=a_sample.z1,
        z2=a_sample.z2,
    )


def run_tests(
    a_sample: Sample,
    sigma_z: float = 1.0,
    permutations: int = 2000,
    seed: int = 0,
    tests: Sequence[DependenceTest] | None = None,
    p_method: PValueMethod = PValueMethod.PERMUTATION,
    threads: int | None = None,
) -> list[DependenceTestResult]:
    """Test an A-sample for dependence between X and Y.

    Args:
        a_sample (Sample): Rows observed under the event, with X and Y assigned;
            the ecc-implied test also needs Z1 and Z2.
        sigma_z (float, optional): Asserted unconditional standard deviation of the scalar covariate. Defaults to 1.0.
        permutations (int, optional): Number of Y permutations B. Defaults to 2000.
        seed (int, optional): Base seed; permutation b uses ``default_rng([seed, b])``. Defaults to 0.
        tests (Sequence[DependenceTest] | None, optional): Tests to run. Defaults to all five.
        p_method (PValueMethod, optional): Permutation or asymptotic p-values. Hoeffding
            and the implied test always use permutations. Defaults to permutation.
        threads (int | None, optional): Worker threads. Defaults to the logical core count.

    Returns:
        list[DependenceTestResult]: One result per test; undefined statistics carry an error.

    Raises:
        InsufficientEventSampleError: If the sample has fewer than 20 rows.

    """  # noqa: E501
    if a_sample.n < MIN_ROWS:
        raise InsufficientEventSampleError(a_sample.n, MIN_ROWS)
    if a_sample.x is None or a_sample.y is None:
        msg = "Sample needs both X and Y roles assigned."
        raise ValueError(msg)
    if permutations < 1:
        msg = "permutations must be at least 1"
        raise ValueError(msg)
    if sigma_z <= 0:
        msg = "sigma_z must be positive"
        raise ValueError(msg)
    p_method = PValueMethod(p_method)
    selected = tuple(DependenceTest) if tests is None else tuple(DependenceTest(t) for t in tests)  # noqa: E501
    functions = _statistics(sigma_z)

    observed: dict[DependenceTest, float] = {}
    errors: dict[DependenceTest, str] = {}
    for test in selected:
        try:
            observed[test] = functions[test](a_sample)
        except _STATISTIC_ERRORS as err:
            errors[test] = str(err)
            msg = f"{test.value} statistic is undefined: {err}"
            _LOGGER.error(msg)  # noqa: TRY400

    permuted_tests = [
        t
        for t in observed
        if p_method is PValueMethod.PERMUTATION or t in _PERMUTATION_ONLY
    ]

    def replicate(b: int) -> dict[DependenceTest, float]:
        rng = np.random.default_rng([seed, b])
        shuffled = _with_y(a_sample, rng.permutation(a_sample.n))
        values = {}
        for test in permuted_tests:
            try:
                values[test] = functions[test](shuffled)
            except _STATISTIC_ERRORS:
                values[test] = math.nan
        return values

    draws = map_ordered(replicate, range(permutations), threads) if permuted_tests else []  # noqa: E501

    results = []
    for test in selected:
        if test in errors:
            results.append(
                DependenceTestResult(
                    test=test,
                    statistic=None,
                    p_value=None,
                    method=p_method,
                    error=errors[test],
                ),
            )
            continue
        statistic = observed[test]
        if test in permuted_tests:
            null = np.array([d[test] for d in draws])
            exceed = int(np.sum(np.abs(null) >= abs(statistic) - 1e-12 * max(1.0, abs(statistic))))  # noqa: E501
            p_value = (1 + exceed) / (permutations + 1)
            method, count = PValueMethod.PERMUTATION, permutations
        else:
            p_value = _asymptotic_p(test, a_sample)
            method, count = PValueMethod.ASYMPTOTIC, 0
        results.append(
            DependenceTestResult(
                test=test,
                statistic=statistic,
                p_value=p_value,
                method=method,
                permutations=count,
            ),
        )
    msg = "Dependence tests: " + ", ".join(
        f"{r.test.value}={r.p_value:.4g}" for r in results if r.p_value is not None
    )
    _LOGGER.info(msg)
    return results


def results_frame(results: Sequence[DependenceTestResult]) -> pd.DataFrame:
    """Return test results as a frame with columns test, statistic, p_value, method, permutations, error."""  # noqa: E501
    return pd.DataFrame(
        [
            {
                "test": r.test.value,
                "statistic": r.statistic,
                "p_value": r.p_value,
                "method": r.method.value,
                "permutations": r.permutations,
                "error": r.error,
            }
            for r in results
        ],
    )
