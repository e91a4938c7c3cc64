"""Conftest for tests of the event conditional correlation package.

This module provides common fixtures used across the test suite: seeded
Gaussian samples with a known correlation structure, the A-sample they yield
under ``Z > 0`` and a small synthetic asset panel.
"""

# tests/conftest.py

import pytest

from event_conditional_correlation.events import EventSpec, event_mask
from event_conditional_correlation.network import Panel
from event_conditional_correlation.sample import Sample
from event_conditional_correlation.synth import GenSpec, PanelSpec, generate, generate_panel

THETA = (0.3, 0.6, 0.5)


@pytest.fixture
def gen_spec() -> GenSpec:
    """Return the trivariate Gaussian used by the estimator tests.

    Returns:
        GenSpec: rho_xy=0.3, rho_xz=0.6, rho_yz=0.5, unit variances.

    """
    return GenSpec(rho_xy=THETA[0], rho_xz=THETA[1], rho_yz=THETA[2], n=50_000, seed=11)


@pytest.fixture
def gaussian_sample(gen_spec: GenSpec) -> Sample:
    """Return a large seeded sample drawn from gen_spec.

    Returns:
        Sample: 50,000 rows of (x, y, z) with Z1 = Z2 = z.

    """
    return generate(gen_spec)


@pytest.fixture
def positive_z_sample(gaussian_sample: Sample) -> Sample:
    """Return the rows of gaussian_sample with z > 0.

    Returns:
        Sample: An A-sample for the event Z > 0.

    """
    return gaussian_sample.subset(event_mask(gaussian_sample, EventSpec.above("z", 0.0)))


@pytest.fixture
def panel() -> Panel:
    """Return a small seeded asset panel with a volatility covariate.

    Returns:
        Panel: 6 assets over 4,000 business days.

    """
    return generate_panel(PanelSpec(p=6, n=4000, seed=3))
