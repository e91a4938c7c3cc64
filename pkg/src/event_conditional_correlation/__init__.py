# SPDX-FileCopyrightText: 2025-present tschoerk <tschoerk@proton.me>
#
# SPDX-License-Identifier: MIT
from .__about__ import __version__
from .deptest import DependenceTest, DependenceTestResult, run_tests
from .estimators import (
    AssertedMoments,
    CorrelationParams,
    DeltaStrategy,
    EccEstimate,
    TruncatedMLE,
    ecc_estimate,
    ecc_formula,
    ecc_population,
    ecc_subsample,
    implied_formula,
    implied_population,
    implied_unconditional,
    transport,
)
from .events import EventSpec, decile_sweep, event_mask, parse_event
from .exceptions import EccError
from .inference import CI, bootstrap_ci, delta_method_estimate
from .mc_harness import StudySpec, run_study
from .network import Panel, bootstrap_centrality, regime_network, split_regimes
from .regression import fit_piecewise, predict
from .sample import Sample
from .synth import Family, GenSpec, generate, oracle_ecc

__all__ = [
    "CI",
    "AssertedMoments",
    "CorrelationParams",
    "DeltaStrategy",
    "DependenceTest",
    "DependenceTestResult",
    "EccError",
    "EccEstimate",
    "EventSpec",
    "Family",
    "GenSpec",
    "Panel",
    "Sample",
    "StudySpec",
    "TruncatedMLE",
    "__version__",
    "bootstrap_centrality",
    "bootstrap_ci",
    "decile_sweep",
    "delta_method_estimate",
    "ecc_estimate",
    "ecc_formula",
    "ecc_population",
    "ecc_subsample",
    "event_mask",
    "fit_piecewise",
    "generate",
    "implied_formula",
    "implied_population",
    "implied_unconditional",
    "oracle_ecc",
    "parse_event",
    "predict",
    "regime_network",
    "run_study",
    "run_tests",
    "split_regimes",
    "transport",
]
