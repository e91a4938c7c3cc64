"""Tests for the population formulas and plug-in estimators.

This module verifies that:
  - The population formula reduces to rho_xy without a variance shift and
    matches the closed form for a scalar covariate.
  - Conditioning, transport and the implied unconditional correlation invert
    each other, and a shift of -1 gives the partial correlation, on a grid of
    1,000 random parameter sets.
  - The corrected estimator matches the truncated-normal truth on Gaussian data,
    including every decile band of a U-shaped curve, and reduces to the sample
    correlation on the whole space.
  - The implied unconditional estimator recovers rho_xy from an A-sample with
    asserted or likelihood-fitted covariate moments, and agrees with the same
    inversion written in correlation units.
  - Singular designs, degenerate conditioning and inconsistent inputs raise
    the matching exceptions.
  - Assumption diagnostics are small on Gaussian data and covariance shifts
    are of rank at most the covariate dimension.

Usage:
    python -m pytest tests/test_estimators.py
"""

import math

import numpy as np
import pytest

from event_conditional_correlation.estimators import (
    AssertedMoments,
    CorrelationParams,
    DeltaStrategy,
    EccEstimate,
    EstimateMethod,
    TruncatedMLE,
    assumption_diagnostics,
    condition_population,
    covariance_shift,
    delta_shift,
    ecc_estimate,
    ecc_formula,
    ecc_population,
    ecc_subsample,
    eigen_sweep,
    implied_formula,
    implied_population,
    implied_unconditional,
    normalized_delta,
    ols_fit,
    partial_correlation,
    population_conditional_covariance,
    r_vector,
    transport,
)
from event_conditional_correlation.events import EventSpec, decile_sweep
from event_conditional_correlation.exceptions import (
    DegenerateConditioningError,
    DimensionMismatchError,
    EventSpecError,
    SingularDesignError,
)
from event_conditional_correlation.sample import Sample
from event_conditional_correlation.synth import GenSpec, generate, oracle_ecc

HALF_DELTA = -2 / math.pi


def _closed_form(a: float, b: float, c: float, d: float) -> float:
    return (a + b * c * d) / math.sqrt((1 + b * b * d) * (1 + c * c * d))


def test_population_without_shift() -> None:
    """Test that a zero variance shift leaves rho_xy unchanged."""
    assert ecc_population(CorrelationParams(0.3, 0.6, 0.5, 0.0)) == pytest.approx(0.3)


@pytest.mark.parametrize("delta", [HALF_DELTA, -0.9947, 0.5, 3.0])
def test_population_closed_form(delta: float) -> None:
    """Test that the population formula matches the scalar closed form."""
    params = CorrelationParams(0.6, 0.7, 0.8, delta)
    assert ecc_population(params) == pytest.approx(_closed_form(0.6, 0.7, 0.8, delta), rel=1e-12)  # noqa: E501


def test_condition_then_implied_round_trip() -> None:
    """Test that conditioning on Z > 0 and recovering gives back rho_xy."""
    params = CorrelationParams(0.3, 0.6, 0.5, HALF_DELTA)
    conditional = condition_population(params)
    assert conditional.rho_xy == pytest.approx(ecc_population(params))
    assert conditional.delta == pytest.approx(1 / (1 + HALF_DELTA) - 1)
    assert implied_population(conditional) == pytest.approx(0.3, abs=1e-12)


def test_transport_identity() -> None:
    """Test that transport with zero shift is the identity and composes with conditioning."""  # noqa: E501
    conditional = condition_population(CorrelationParams(0.3, 0.6, 0.5, HALF_DELTA))
    assert transport(conditional, 0.0) == pytest.approx(conditional.rho_xy)
    assert transport(conditional, conditional.delta) == pytest.approx(0.3, abs=1e-12)


def test_conditioning_needs_variance() -> None:
    """Test that an event fixing Z raises DegenerateConditioningError."""
    with pytest.raises(DegenerateConditioningError):
        condition_population(CorrelationParams(0.3, 0.6, 0.5, -1.0))


def test_correlation_params_validation() -> None:
    """Test that correlations outside (-1, 1) or a singular matrix raise ValueError."""
    with pytest.raises(ValueError, match="positive definite"):
        CorrelationParams(0.9, 0.9, -0.9)
    with pytest.raises(ValueError, match="positive definite"):
        CorrelationParams(0.6, 0.8, 0.0)
    with pytest.raises(ValueError, match=r"rho_xz must lie in \(-1, 1\)"):
        CorrelationParams(0.1, 1.0, 0.0)
    with pytest.raises(ValueError, match="rho_xz"):
        CorrelationParams(0.1, 1.5, 0.0)
    with pytest.raises(ValueError, match="delta"):
        CorrelationParams(0.1, 0.2, 0.3, -2.0)


def test_partial_correlation() -> None:
    """Test the partial correlation closed form and its degenerate case."""
    expected = (0.3 - 0.6 * 0.5) / math.sqrt((1 - 0.36) * (1 - 0.25))
    assert partial_correlation(0.3, 0.6, 0.5) == pytest.approx(expected)
    with pytest.raises(DegenerateConditioningError):
        partial_correlation(0.3, 1.0, 0.5)


def test_ecc_formula_degenerate() -> None:
    """Test that a non-positive conditional variance raises DegenerateConditioningError."""  # noqa: E501
    with pytest.raises(DegenerateConditioningError):
        ecc_formula(0.1, 1.0, 1.0, np.array([2.0]), np.array([1.0]), np.array([[-1.0]]), np.array([[0.0]]), np.array([[0.0]]))  # noqa: E501


def test_r_vector_and_normalized_delta() -> None:
    """Test the R-vector inversion and the correlation-unit shift in the scalar case."""
    b, delta = 0.6, HALF_DELTA
    conditioned = b * math.sqrt(1 + delta) / math.sqrt(1 + b * b * delta)
    np.testing.assert_allclose(r_vector(np.array([conditioned]), np.array([1 + delta])), [b])  # noqa: E501
    np.testing.assert_allclose(r_vector(np.array([0.4]), np.array([1.0])), [0.4])
    np.testing.assert_allclose(normalized_delta(np.array([[-1.0]]), np.array([[4.0]]), np.array([[4.0]])), [[-0.25]])  # noqa: E501
    with pytest.raises(DegenerateConditioningError):
        r_vector(np.array([0.1]), np.array([-5.0]))


def test_implied_formula_inverts_population() -> None:
    """Test that the implied formula recovers rho_xy from conditional correlations."""
    params = CorrelationParams(0.3, 0.6, 0.5, HALF_DELTA)
    rho_a = ecc_population(params)
    value = implied_formula(
        rho_a,
        np.array([0.6]),
        np.array([0.5]),
        np.array([[HALF_DELTA]]),
        np.array([[HALF_DELTA]]),
        np.array([[HALF_DELTA]]),
    )
    assert value == pytest.approx(0.3, abs=1e-12)


def _admissible_grid(points: int, seed: int) -> list[tuple[float, float, float, float]]:
    rng = np.random.default_rng(seed)
    grid: list[tuple[float, float, float, float]] = []
    while len(grid) < points:
        a, b, c = rng.uniform(-0.95, 0.95, 3)
        matrix = np.array([[1.0, a, b], [a, 1.0, c], [b, c, 1.0]])
        if np.linalg.eigvalsh(matrix)[0] > 0.05:  # noqa: PLR2004
            grid.append((float(a), float(b), float(c), float(rng.uniform(-0.95, 3.0))))
    return grid


def test_conditioning_round_trip_on_grid() -> None:
    """Test that conditioning then recovering returns rho_xy on 1,000 random parameter sets."""  # noqa: E501
    worst = 0.0
    for a, b, c, delta in _admissible_grid(1000, seed=21):
        conditional = condition_population(CorrelationParams(a, b, c, delta))
        worst = max(worst, abs(implied_population(conditional) - a))
    assert worst <= 1e-12


def test_full_shift_is_partial_correlation_on_grid() -> None:
    """Test that a shift of -1 gives the partial correlation on 1,000 random parameter sets."""  # noqa: E501
    for a, b, c, _ in _admissible_grid(1000, seed=22):
        assert ecc_population(CorrelationParams(a, b, c, -1.0)) == pytest.approx(partial_correlation(a, b, c), abs=1e-12)  # noqa: E501


def test_decile_curve_tracks_oracle() -> None:
    """Test that the decile-band curve matches the truncated-normal truth and dips in an interior band."""  # noqa: E501
    spec = GenSpec(rho_xy=0.6, rho_xz=0.7, rho_yz=0.8, n=100_000, seed=5)
    sample = generate(spec)
    curve = []
    for _, band in decile_sweep(sample):
        estimate = ecc_estimate(sample, band)
        assert estimate.rho == pytest.approx(oracle_ecc(spec, band).value, abs=0.02)
        curve.append(estimate.rho)
    lowest = int(np.argmin(curve))
    assert 0 < lowest < len(curve) - 1
    assert curve[0] > curve[lowest] + 0.1
    assert curve[-1] > curve[lowest] + 0.1


def test_ols_fit_exact_relation() -> None:
    """Test that an exact linear relation gives the slope and zero residuals."""
    x = np.linspace(-1, 1, 100)
    sample = Sample(data=np.column_stack([x, 2 * x]), columns=("x", "y"))
    fit = ols_fit(sample, "y", ["x"])
    assert fit.beta[0] == pytest.approx(2.0)
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-12)


def test_ols_fit_singular_design() -> None:
    """Test that collinear covariates raise SingularDesignError naming the culprit."""
    rng = np.random.default_rng(1)
    z = rng.standard_normal(50)
    sample = Sample(
        data=np.column_stack([rng.standard_normal(50), z, 2 * z]),
        columns=("y", "z", "w"),
    )
    with pytest.raises(SingularDesignError) as info:
        ols_fit(sample, "y", ["z", "w"])
    assert info.value.columns == ("w",)


def test_ecc_estimate_matches_truth(gaussian_sample: Sample) -> None:
    """Test that the corrected estimate under Z > 0 is close to the truncated-normal truth."""  # noqa: E501
    truth = ecc_population(CorrelationParams(0.3, 0.6, 0.5, HALF_DELTA))
    estimate = ecc_estimate(gaussian_sample, EventSpec.above("z", 0.0))
    assert estimate.rho == pytest.approx(truth, abs=0.02)
    assert estimate.method is EstimateMethod.FULL_SAMPLE_CORRECTED
    assert estimate.n_total == gaussian_sample.n
    assert estimate.n_event == pytest.approx(gaussian_sample.n / 2, rel=0.02)
    assert not estimate.clamped


def test_ecc_subsample_matches_truth(gaussian_sample: Sample) -> None:
    """Test that the subsample estimate is close to the truth on a large sample."""
    truth = ecc_population(CorrelationParams(0.3, 0.6, 0.5, HALF_DELTA))
    estimate = ecc_subsample(gaussian_sample, EventSpec.above("z", 0.0))
    assert estimate.rho == pytest.approx(truth, abs=0.03)
    assert estimate.method is EstimateMethod.SUBSAMPLE


def test_whole_space_is_sample_correlation(gaussian_sample: Sample) -> None:
    """Test that the whole-space event reproduces the ordinary sample correlation."""
    estimate = ecc_estimate(gaussian_sample, EventSpec.whole_space("z"))
    expected = np.corrcoef(gaussian_sample.column("x"), gaussian_sample.column("y"))[0, 1]  # noqa: E501
    assert estimate.rho == pytest.approx(expected, abs=1e-12)


def test_gaussian_model_strategy(gaussian_sample: Sample) -> None:
    """Test that the Gaussian-model shift agrees with the empirical shift on Gaussian data."""  # noqa: E501
    event = EventSpec.band("z", 0.5, 0.1)
    empirical = ecc_estimate(gaussian_sample, event)
    modelled = ecc_estimate(gaussian_sample, event, strategy=DeltaStrategy.GAUSSIAN_MODEL)  # noqa: E501
    assert modelled.rho == pytest.approx(empirical.rho, abs=0.02)


def test_delta_shift_half_space(gaussian_sample: Sample) -> None:
    """Test that the empirical shift under Z > 0 is close to -2/pi."""
    shift = delta_shift(gaussian_sample, EventSpec.above("z", 0.0))
    assert shift.delta[0, 0] == pytest.approx(HALF_DELTA, abs=0.02)
    assert shift.event_mass == pytest.approx(0.5, abs=0.01)


def test_implied_unconditional_asserted(positive_z_sample: Sample) -> None:
    """Test that the implied estimate with the asserted unit variance recovers rho_xy."""  # noqa: E501
    estimate = implied_unconditional(positive_z_sample, AssertedMoments.variance(1.0))
    assert estimate.rho == pytest.approx(0.3, abs=0.03)
    assert estimate.method is EstimateMethod.IMPLIED_UNCONDITIONAL
    assert estimate.n_event == positive_z_sample.n


def test_implied_unconditional_mle(positive_z_sample: Sample) -> None:
    """Test that the implied estimate with truncated-likelihood moments recovers rho_xy."""  # noqa: E501
    estimate = implied_unconditional(positive_z_sample, TruncatedMLE(EventSpec.above("z", 0.0)))  # noqa: E501
    assert estimate.rho == pytest.approx(0.3, abs=0.05)


def test_implied_without_shift(positive_z_sample: Sample) -> None:
    """Test that asserting the A-sample's own covariate variance returns its plain correlation."""  # noqa: E501
    own = float(np.var(positive_z_sample.column("z"), ddof=1))
    estimate = implied_unconditional(positive_z_sample, AssertedMoments.variance(own))
    expected = np.corrcoef(positive_z_sample.column("x"), positive_z_sample.column("y"))[0, 1]  # noqa: E501
    assert estimate.rho == pytest.approx(expected, abs=1e-12)


def test_implied_matches_correlation_form(positive_z_sample: Sample) -> None:
    """Test that the slope-based estimate equals the inversion written in correlation units."""  # noqa: E501
    corr = np.corrcoef(positive_z_sample.block(["x", "y", "z"]), rowvar=False)
    ratio = np.array([float(np.var(positive_z_sample.column("z"), ddof=1))])
    delta_bar = normalized_delta(np.array([[ratio[0] - 1.0]]), np.eye(1), np.eye(1))
    expected = implied_formula(
        float(corr[0, 1]),
        r_vector(corr[0, 2:], ratio),
        r_vector(corr[1, 2:], ratio),
        delta_bar,
        delta_bar,
        delta_bar,
    )
    estimate = implied_unconditional(positive_z_sample, AssertedMoments.variance(1.0))
    assert estimate.rho == pytest.approx(expected, abs=1e-10)


def test_truncated_mle_needs_absolute_event(positive_z_sample: Sample) -> None:
    """Test that a quantile band cannot drive the truncated likelihood."""
    with pytest.raises(EventSpecError, match="absolute bounds"):
        implied_unconditional(positive_z_sample, TruncatedMLE(EventSpec.band("z", 1.0)))


def test_asserted_moments_shape(positive_z_sample: Sample) -> None:
    """Test that asserted moments of the wrong dimension raise DimensionMismatchError."""  # noqa: E501
    with pytest.raises(DimensionMismatchError):
        implied_unconditional(positive_z_sample, AssertedMoments(np.eye(2)))
    with pytest.raises(ValueError, match="positive"):
        AssertedMoments.variance(0.0)


def test_estimate_invariants() -> None:
    """Test that an estimate outside [-1, 1] or with a CI missing it is rejected."""
    with pytest.raises(ValueError, match="rho"):
        EccEstimate(rho=1.5)
    with pytest.raises(ValueError, match="does not contain"):
        EccEstimate(rho=0.5, ci=(0.6, 0.7))
    widened = EccEstimate(rho=0.5).with_interval(0.6, 0.7, "delta")
    assert widened.ci == (0.5, 0.7)


def test_assumption_diagnostics_gaussian(gaussian_sample: Sample) -> None:
    """Test that the assumption gaps are small on Gaussian data."""
    diagnostics = assumption_diagnostics(gaussian_sample, EventSpec.above("z", 0.0))
    assert diagnostics.a1_gap < 0.05
    assert diagnostics.a2_gap < 0.03
    assert diagnostics.bias_bound_scale == pytest.approx(2 / math.pi, abs=0.03)


def test_covariance_shift_rank() -> None:
    """Test that truncating one Gaussian coordinate shifts the covariance by a rank-one matrix."""  # noqa: E501
    spec = GenSpec(rho_xy=0.3, rho_xz=0.6, rho_yz=0.5)
    cov = spec.correlation_matrix()
    conditional = population_conditional_covariance(cov, 2, 0.5, math.inf)
    shift = covariance_shift(cov[:2, :2], conditional[:2, :2], z_dim=1)
    assert shift.effective_rank == 1
    assert shift.within_rank_bound
    assert shift.singular_values[0] > 0


def test_covariance_shift_shape_mismatch() -> None:
    """Test that matrices of different shapes raise DimensionMismatchError."""
    with pytest.raises(DimensionMismatchError):
        covariance_shift(np.eye(2), np.eye(3), z_dim=1)


def test_eigen_sweep() -> None:
    """Test that a very low threshold leaves the spectrum of the non-Z block unchanged."""  # noqa: E501
    cov = GenSpec(rho_xy=0.3, rho_xz=0.6, rho_yz=0.5).correlation_matrix()
    slices = eigen_sweep(cov, 2, [-10.0, 0.0, 1.0])
    np.testing.assert_allclose(slices[0].eigenvalues, np.sort(np.linalg.eigvalsh(cov[:2, :2]))[::-1], atol=1e-8)  # noqa: E501
    for eigen in slices:
        assert np.all(np.diff(eigen.eigenvalues) <= 0)
    assert slices[2].eigenvalues[0] < slices[0].eigenvalues[0]
