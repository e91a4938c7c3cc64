"""Small-sample RMSE studies of the estimators on synthetic data.

A study draws ``replications`` samples at every size, sweeps quantile bands of
Z and scores each method against the population truth:

- ``ecc-curve``: the estimated conditional correlation on every band against
  its oracle value.
- ``implied-unconditional``: the unconditional correlation recovered from each
  band's rows alone against ``rho_xy``.

RMSE pools the squared errors over replications and bands.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from .estimators import (
    AssertedMoments,
    DeltaStrategy,
    TruncatedMLE,
    ecc_estimate,
    ecc_subsample,
    implied_unconditional,
)
from .events import EventSpec, decile_sweep, event_intervals, event_mask
from .exceptions import EccError, StudyFailureError
from .parallel import map_ordered
from .synth import GenSpec, generate, oracle_ecc

_LOGGER = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.05


class Task(str, Enum):
    """What a study estimates."""

    ECC_CURVE = "ecc-curve"
    IMPLIED_UNCONDITIONAL = "implied-unconditional"


class StudyMethod(str, Enum):
    """Estimators compared in a study."""

    PROPOSED = "proposed"
    SUBSAMPLE = "subsample"


class MomentChoice(str, Enum):
    """Unconditional covariate moments for the implied task."""

    ASSERTED = "asserted"
    MLE = "mle"


@dataclass(frozen=True)
class StudySpec:
    """Configuration of a Monte Carlo study.

    Attributes:
        gen (GenSpec): Distribution; its ``n`` and ``seed`` are ignored.
        sample_sizes (tuple[int, ...]): Strictly increasing sample sizes.
        replications (int): Replications per size.
        methods (tuple[StudyMethod, ...]): Methods to score.
        task (Task): Study task.
        seed (int): Base seed of all replications.
        width (float): Band width in quantile levels.
        strategy (DeltaStrategy): Conditional moment source of the proposed curve estimator.
        moments (MomentChoice): Unconditional covariate moments of the implied task.
        oracle_draws (int): Monte Carlo draws of non-closed-form oracles.
        threads (int | None): Worker threads.

    """  # noqa: E501

    gen: GenSpec
    sample_sizes: tuple[int, ...] = (250, 500, 1000, 2000)
    replications: int = 200
    methods: tuple[StudyMethod, ...] = (StudyMethod.PROPOSED, StudyMethod.SUBSAMPLE)
    task: Task = Task.ECC_CURVE
    seed: int = 0
    width: float = 0.1
    strategy: DeltaStrategy = DeltaStrategy.EMPIRICAL
    moments: MomentChoice = MomentChoice.ASSERTED
    oracle_draws: int = 10_000_000
    threads: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        """Validate sizes, replications and methods."""
        if self.replications < 1:
            msg = "replications must be at least 1"
            raise ValueError(msg)
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
            msg = "sample_sizes must be non-empty and strictly increasing"
            raise ValueError(msg)
        if not self.methods:
            msg = "at least one method is required"
            raise ValueError(msg)
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "methods", tuple(StudyMethod(m) for m in self.methods))
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "moments", MomentChoice(self.moments))


@dataclass(frozen=True)
class StudyRow:
    """RMSE of one method at one sample size."""

    method: StudyMethod
    n: int
    rmse: float
    replications: int
    failures: int = 0
    clamped: int = 0


@dataclass(frozen=True)
class StudyResult:
    """Outcome of a study.

    Attributes:
        spec (StudySpec): The study configuration.
        rows (tuple[StudyRow, ...]): One row per (method, n).
        oracle (tuple[float, ...]): Truth per band, in band order.

    """

    spec: StudySpec
    rows: tuple[StudyRow, ...]
    oracle: tuple[float, ...]

    def rmse(self, method: StudyMethod) -> np.ndarray:
        """Return the RMSE of a method across sample sizes."""
        method = StudyMethod(method)
        return np.array([row.rmse for row in self.rows if row.method is method])

    def to_frame(self) -> pd.DataFrame:
        """Return the rows with columns family, theta, method, n, rmse, replications, seed."""  # noqa: E501
        gen = self.spec.gen
        theta = f"({gen.rho_xy:g},{gen.rho_xz:g},{gen.rho_yz:g},{gen.eta:g})"
        return pd.DataFrame(
            [
                {
                    "family": gen.family.value,
                    "theta": theta,
                    "method": row.method.value,
                    "n": row.n,
                    "rmse": row.rmse,
                    "replications": row.replications,
                    "seed": self.spec.seed,
                }
                for row in self.rows
            ],
        )


def derived_seed(*keys: int) -> int:
    """Return an independent 32-bit seed for a tuple of integer keys."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def _absolute_band(event: EventSpec, lower: float, upper: float) -> EventSpec:
    column = event.columns[0]
    if event.lower_quantile <= 0:
        return EventSpec.below(column, upper)
    if event.upper_quantile >= 1:
        return EventSpec.above(column, lower)
    return EventSpec.rectangle({column: (lower, upper)})


def _truths(spec: StudySpec, bands: list[tuple[float, EventSpec]]) -> list[float]:
    if spec.task is Task.IMPLIED_UNCONDITIONAL:
        return [spec.gen.rho_xy] * len(bands)
    return [
        oracle_ecc(spec.gen, event, draws=spec.oracle_draws).value
        for _, event in bands
    ]


def _estimate(spec: StudySpec, method: StudyMethod, sample, event: EventSpec):  # noqa: ANN001, ANN202
    if spec.task is Task.ECC_CURVE:
        if method is StudyMethod.PROPOSED:
            return ecc_estimate(sample, event, strategy=spec.strategy)
        return ecc_subsample(sample, event)
    mask = event_mask(sample, event)
    a_sample = sample.subset(mask)
    if method is StudyMethod.SUBSAMPLE:
        return ecc_subsample(a_sample, EventSpec.whole_space("z"))
    if spec.moments is MomentChoice.MLE:
        interval = event_intervals(sample, event)["z"]
        moments = TruncatedMLE(_absolute_band(event, interval.lower, interval.upper))
    else:
        moments = AssertedMoments.variance(spec.gen.z_variance, "z")
    return implied_unconditional(a_sample, moments)


def run_study(spec: StudySpec) -> StudyResult:
    """Run a seeded Monte Carlo study.

    Replication ``r`` at size index ``k`` draws its data with the seed
    ``derived_seed(spec.seed, k, r)``, so results do not depend on the thread
    count.

    Returns:
        StudyResult: RMSE per method and sample size.

    Raises:
        StudyFailureError: If more than 5% of the estimation cells fail.

    """
    probe = generate(spec.gen.with_draw(spec.sample_sizes[0], spec.seed))
    bands = decile_sweep(probe, "z", spec.width)
    truths = np.array(_truths(spec, bands))
    msg = f"Study {spec.task.value} on {spec.gen.family.value}: truths {np.round(truths, 4).tolist()}"  # noqa: E501
    _LOGGER.info(msg)

    tasks = [
        (k, n, r)
        for k, n in enumerate(spec.sample_sizes)
        for r in range(spec.replications)
    ]

    def replicate(task: tuple[int, int, int]) -> dict[StudyMethod, list[tuple[float, bool] | None]]:  # noqa: E501
        k, n, r = task
        sample = generate(spec.gen.with_draw(n, derived_seed(spec.seed, k, r)))
        outcome: dict[StudyMethod, list[tuple[float, bool] | None]] = {}
        for method in spec.methods:
            cells: list[tuple[float, bool] | None] = []
            for _, event in bands:
                try:
                    estimate = _estimate(spec, method, sample, event)
                except EccError as err:
                    msg = f"Cell n={n} replication={r} {method.value} {event} failed: {err}"  # noqa: E501
                    _LOGGER.debug(msg)
                    cells.append(None)
                else:
                    cells.append((estimate.rho, estimate.clamped))
            outcome[method] = cells
        return outcome

    outcomes = map_ordered(replicate, tasks, spec.threads)

    total_cells = len(tasks) * len(spec.methods) * len(bands)
    total_failures = 0
    rows = []
    for k, n in enumerate(spec.sample_sizes):
        chunk = outcomes[k * spec.replications : (k + 1) * spec.replications]
        for method in spec.methods:
            squared = []
            failures = 0
            clamped = 0
            for outcome in chunk:
                for truth, cell in zip(truths, outcome[method]):
                    if cell is None:
                        failures += 1
                        continue
                    squared.append((cell[0] - truth) ** 2)
                    clamped += int(cell[1])
            total_failures += failures
            rmse = math.sqrt(float(np.mean(squared))) if squared else math.nan
            rows.append(
                StudyRow(
                    method=method,
                    n=n,
                    rmse=rmse,
                    replications=spec.replications,
                    failures=failures,
                    clamped=clamped,
                ),
            )
    if total_failures > MAX_FAILURE_SHARE * total_cells:
        msg = f"{total_failures} of {total_cells} study cells failed."
        raise StudyFailureError(msg)
    if total_failures:
        msg = f"{total_failures} of {total_cells} study cells failed and were skipped"
        _LOGGER.warning(msg)
    return StudyResult(spec=spec, rows=tuple(rows), oracle=tuple(float(t) for t in truths))  # noqa: E501


def loglog_slope(result: StudyResult, method: StudyMethod = StudyMethod.PROPOSED) -> float:  # noqa: E501
    """Return the least-squares slope of log RMSE against log n."""
    rmse = result.rmse(method)
    sizes = np.array(result.spec.sample_sizes, dtype=float)
    if len(sizes) < 2:  # noqa: PLR2004
        msg = "a slope needs at least two sample sizes"
        raise ValueError(msg)
    slope, _ = np.polyfit(np.log(sizes), np.log(rmse), 1)
    return float(slope)
