"""Seeded synthetic data with known event conditional correlations.

Three families share one construction: a standard Gaussian vector ``G`` with
correlation matrix built from ``(rho_xy, rho_xz, rho_yz)`` is scaled per row.

- ``gaussian-scale``: ``sqrt(eta) G``, a trivariate normal with variance eta.
- ``student-t``: ``G / sqrt(W / eta)`` with ``W ~ chi2(eta)``, a multivariate t.
- ``gaussian-chisq-mixture``: ``sqrt(V) G`` with ``V ~ chi2(eta)`` per row.

Every family keeps theta as the correlation matrix of (X, Y, Z). The module
also builds one-factor asset panels with a volatility covariate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from scipy import integrate, optimize, stats

from .estimators import CorrelationParams, ecc_population
from .events import EventSpec, Interval
from .exceptions import EventSpecError, NonPositiveDefiniteError, OracleUnstableError
from .network import Panel
from .sample import Sample
from .truncated import MIN_EVENT_MASS, truncated_normal_moments

if TYPE_CHECKING:
    from collections.abc import Sequence

_LOGGER = logging.getLogger(__name__)

COLUMNS = ("x", "y", "z")
ORACLE_CHUNK = 1_000_000
PANEL_START = "2007-07-23"
_PD_TOLERANCE = 1e-12


class Family(str, Enum):
    """Distribution family of synthetic draws."""

    GAUSSIAN_SCALE = "gaussian-scale"
    STUDENT_T = "student-t"
    CHISQ_MIXTURE = "gaussian-chisq-mixture"


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a synthetic (X, Y, Z) sample.

    Attributes:
        family (Family): Distribution family.
        rho_xy (float): Correlation of X and Y.
        rho_xz (float): Correlation of X and Z.
        rho_yz (float): Correlation of Y and Z.
        eta (float): Variance (gaussian-scale), degrees of freedom (student-t) or
            chi-square degrees of freedom of the row variance (mixture).
        n (int): Number of rows.
        seed (int): Seed of the row stream.

    """

    family: Family = Family.GAUSSIAN_SCALE
    rho_xy: float = 0.0
    rho_xz: float = 0.0
    rho_yz: float = 0.0
    eta: float = 1.0
    n: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate eta, n and the correlation matrix."""
        object.__setattr__(self, "family", Family(self.family))
        if not self.eta > 0:
            msg = "eta must be positive"
            raise ValueError(msg)
        if self.family is Family.STUDENT_T and not self.eta > 2:  # noqa: PLR2004
            msg = "student-t needs eta > 2 for finite variances"
            raise ValueError(msg)
        if self.n < 1:
            msg = "n must be at least 1"
            raise ValueError(msg)
        self.factor()

    def correlation_matrix(self) -> np.ndarray:
        """Return the correlation matrix of (X, Y, Z)."""
        return np.array(
            [
                [1.0, self.rho_xy, self.rho_xz],
                [self.rho_xy, 1.0, self.rho_yz],
                [self.rho_xz, self.rho_yz, 1.0],
            ],
        )

    def factor(self) -> np.ndarray:
        """Return a square root F of the correlation matrix, F F^T = matrix.

        Raises:
            NonPositiveDefiniteError: If the matrix is not positive definite.

        """
        values, vectors = np.linalg.eigh(self.correlation_matrix())
        if values[0] <= _PD_TOLERANCE:
            msg = f"theta ({self.rho_xy}, {self.rho_xz}, {self.rho_yz}) is not a positive definite correlation matrix"  # noqa: E501
            raise NonPositiveDefiniteError(msg)
        return vectors * np.sqrt(values)

    @property
    def z_variance(self) -> float:
        """Population variance of each coordinate."""
        if self.family is Family.STUDENT_T:
            return self.eta / (self.eta - 2)
        return self.eta

    def params(self, delta: float = 0.0) -> CorrelationParams:
        """Return theta as correlation parameters."""
        return CorrelationParams(self.rho_xy, self.rho_xz, self.rho_yz, delta)

    def with_draw(self, n: int, seed: int) -> GenSpec:
        """Return the same distribution with another size and seed."""
        return replace(self, n=n, seed=seed)


def _draw(spec: GenSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    gaussian = rng.standard_normal((size, 3)) @ spec.factor().T
    if spec.family is Family.GAUSSIAN_SCALE:
        return math.sqrt(spec.eta) * gaussian
    mixing = rng.chisquare(spec.eta, size)
    if spec.family is Family.STUDENT_T:
        return gaussian / np.sqrt(mixing / spec.eta)[:, np.newaxis]
    return gaussian * np.sqrt(mixing)[:, np.newaxis]


def generate(spec: GenSpec) -> Sample:
    """Draw ``spec.n`` rows of (x, y, z) with roles X=x, Y=y, Z1=Z2=z."""
    data = _draw(spec, spec.n, np.random.default_rng(spec.seed))
    return Sample(data=data, columns=COLUMNS, x="x", y="y", z1=("z",), z2=("z",))


def _mixture_cdf(value: float, eta: float) -> float:
    def integrand(v: float) -> float:
        return float(stats.norm.cdf(value / math.sqrt(v)) * stats.chi2.pdf(v, eta))

    result, _ = integrate.quad(integrand, 0, math.inf, limit=200)
    return result


def population_quantile(family: Family, eta: float, level: float) -> float:
    """Return the exact quantile of one coordinate of a family.

    Args:
        family (Family): Distribution family.
        eta (float): Family parameter.
        level (float): Quantile level in [0, 1].

    Returns:
        float: The quantile; ``-inf`` at 0 and ``inf`` at 1.

    """
    if not 0 <= level <= 1:
        msg = "level must lie in [0, 1]"
        raise ValueError(msg)
    family = Family(family)
    if level in (0, 1):
        return -math.inf if level == 0 else math.inf
    if family is Family.GAUSSIAN_SCALE:
        return float(stats.norm.ppf(level, scale=math.sqrt(eta)))
    if family is Family.STUDENT_T:
        return float(stats.t.ppf(level, eta))
    if level == 0.5:  # noqa: PLR2004
        return 0.0
    bound = 10.0 * math.sqrt(eta + 1)
    while _mixture_cdf(bound, eta) < level or _mixture_cdf(-bound, eta) > level:
        bound *= 2
    return float(
        optimize.brentq(lambda v: _mixture_cdf(v, eta) - level, -bound, bound, xtol=1e-12),  # noqa: E501
    )


@dataclass(frozen=True)
class Oracle:
    """True conditional correlation of a synthetic distribution under an event.

    Attributes:
        value (float): The conditional correlation.
        se (float): Monte Carlo standard error; 0 for closed-form values.
        mass (float): Probability of the event.
        method (str): ``truncated-normal`` or ``monte-carlo``.

    """

    value: float
    se: float
    mass: float
    method: str


def _interval_mask(block: np.ndarray, intervals: dict[str, Interval]) -> np.ndarray:
    mask = np.ones(block.shape[0], dtype=bool)
    for column, interval in intervals.items():
        mask &= interval.contains(block[:, COLUMNS.index(column)])
    return mask


def _population_intervals(spec: GenSpec, event: EventSpec) -> dict[str, Interval]:
    unknown = [c for c in event.columns if c not in COLUMNS]
    if unknown:
        msg = f"Oracle events must target x, y or z, got {unknown}"
        raise EventSpecError(msg)
    return event.intervals(
        lambda _column, level: population_quantile(spec.family, spec.eta, level),
    )


def oracle_ecc(
    spec: GenSpec,
    event: EventSpec,
    draws: int = 10_000_000,
    method: str = "auto",
) -> Oracle:
    """Compute the true conditional correlation of X and Y under an event.

    Quantile bands use the family's population quantiles. Gaussian events on
    ``z`` alone are evaluated from truncated-normal moments; everything else by
    chunked Monte Carlo seeded from ``spec.seed``.

    Args:
        spec (GenSpec): The distribution; ``n`` is ignored.
        event (EventSpec): Event over x, y or z.
        draws (int, optional): Monte Carlo draws. Defaults to 10_000_000.
        method (str, optional): ``auto`` or ``monte-carlo``. Defaults to ``auto``.

    Returns:
        Oracle: The true value with its standard error.

    Raises:
        OracleUnstableError: If the event mass is below 1e-4.

    """
    intervals = _population_intervals(spec, event)
    if method not in ("auto", "monte-carlo"):
        msg = f"Unknown oracle method {method!r}"
        raise ValueError(msg)
    if (
        method == "auto"
        and spec.family is Family.GAUSSIAN_SCALE
        and tuple(intervals) == ("z",)
    ):
        sd = math.sqrt(spec.eta)
        _, variance, mass = truncated_normal_moments(
            intervals["z"].lower,
            intervals["z"].upper,
            0.0,
            sd,
        )
        if mass < MIN_EVENT_MASS:
            raise OracleUnstableError(mass)
        value = ecc_population(spec.params(variance / spec.eta - 1))
        return Oracle(value=value, se=0.0, mass=mass, method="truncated-normal")

    sums = np.zeros(6)
    done = 0
    chunk_index = 0
    while done < draws:
        size = min(ORACLE_CHUNK, draws - done)
        rng = np.random.default_rng([spec.seed, chunk_index])
        block = _draw(spec, size, rng)
        inside = block[_interval_mask(block, intervals)]
        x, y = inside[:, 0], inside[:, 1]
        sums += [len(x), x.sum(), y.sum(), x @ x, y @ y, x @ y]
        done += size
        chunk_index += 1
    count, sx, sy, sxx, syy, sxy = sums
    mass = count / draws
    if mass < MIN_EVENT_MASS or count < 3:  # noqa: PLR2004
        raise OracleUnstableError(mass)
    cov = sxy / count - sx * sy / count**2
    var_x = sxx / count - (sx / count) ** 2
    var_y = syy / count - (sy / count) ** 2
    value = float(np.clip(cov / math.sqrt(var_x * var_y), -1.0, 1.0))
    msg = f"Monte Carlo oracle for {event}: {value:.6f} from {int(count)} of {draws} draws"  # noqa: E501
    _LOGGER.debug(msg)
    return Oracle(
        value=value,
        se=(1 - value**2) / math.sqrt(count),
        mass=float(mass),
        method="monte-carlo",
    )


@dataclass(frozen=True)
class PanelSpec:
    """Parameters of a one-factor asset panel with a volatility covariate.

    Each asset is ``X_i = b_i Z + l_i F + e_i`` with Z the volatility covariate,
    F a common factor and ``e_i`` idiosyncratic noise, all independent standard
    normals (noise scaled by ``noise_sd``). In crisis rows, where Z is above its
    ``crisis_quantile`` population quantile, asset i additionally loads
    ``contagion[i]`` on F.

    Attributes:
        p (int): Number of assets.
        n (int): Number of trading days.
        covariate_loadings (tuple[float, ...] | None): b_i; defaults to a ramp 0.3 to 0.9.
        factor_loadings (tuple[float, ...] | None): l_i; defaults to a ramp 0.9 to 0.3.
        contagion (tuple[float, ...] | None): Extra crisis loadings; None for a pure volatility shift.
        noise_sd (float): Idiosyncratic standard deviation.
        crisis_quantile (float): Population quantile of Z opening the crisis regime.
        seed (int): Seed of the row stream.

    """  # noqa: E501

    p: int = 10
    n: int = 4000
    covariate_loadings: tuple[float, ...] | None = None
    factor_loadings: tuple[float, ...] | None = None
    contagion: tuple[float, ...] | None = None
    noise_sd: float = 1.0
    crisis_quantile: float = 0.75
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate dimensions."""
        if self.p < 3:  # noqa: PLR2004
            msg = "p must be at least 3"
            raise ValueError(msg)
        if self.n < 3:  # noqa: PLR2004
            msg = "n must be at least 3"
            raise ValueError(msg)
        for name in ("covariate_loadings", "factor_loadings", "contagion"):
            value = getattr(self, name)
            if value is not None and len(value) != self.p:
                msg = f"{name} must have {self.p} entries"
                raise ValueError(msg)
        if self.noise_sd <= 0:
            msg = "noise_sd must be positive"
            raise ValueError(msg)

    def loadings(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return covariate, factor and contagion loadings as arrays."""
        b = np.linspace(0.3, 0.9, self.p) if self.covariate_loadings is None else np.asarray(self.covariate_loadings)  # noqa: E501
        lam = np.linspace(0.9, 0.3, self.p) if self.factor_loadings is None else np.asarray(self.factor_loadings)  # noqa: E501
        extra = np.zeros(self.p) if self.contagion is None else np.asarray(self.contagion)  # noqa: E501
        return b, lam, extra


def generate_panel(spec: PanelSpec, assets: Sequence[str] | None = None) -> Panel:
    """Draw a synthetic panel of residuals and a single volatility covariate."""
    rng = np.random.default_rng(spec.seed)
    b, lam, extra = spec.loadings()
    z = rng.standard_normal(spec.n)
    factor = rng.standard_normal(spec.n)
    noise = spec.noise_sd * rng.standard_normal((spec.n, spec.p))
    crisis = z >= stats.norm.ppf(spec.crisis_quantile)
    loadings = lam[np.newaxis, :] + np.outer(crisis, extra)
    residuals = np.outer(z, b) + loadings * factor[:, np.newaxis] + noise
    names = tuple(assets) if assets is not None else tuple(f"a{i + 1:02d}" for i in range(spec.p))  # noqa: E501
    return Panel(
        residuals=residuals,
        covariates=z[:, np.newaxis],
        assets=names,
        covariate_names=("vol",),
        dates=pd.bdate_range(start=PANEL_START, periods=spec.n),
    )
