"""Tests for the ordered parallel map and the run configuration.

This module verifies that:
  - map_ordered keeps input order on any thread count and rejects zero threads.
  - Seeds resolve from the flag first, then from ECC_SEED.
  - RunConfig requires a seed for runs that draw random numbers.

Usage:
    python -m pytest tests/test_parallel_config.py
"""

import threading

import pytest

from event_conditional_correlation.config import SEED_ENV, RunConfig, resolve_seed
from event_conditional_correlation.parallel import default_threads, map_ordered


@pytest.mark.parametrize("threads", [1, 3, 8])
def test_map_ordered_keeps_order(threads: int) -> None:
    """Test that results come back in input order."""
    assert map_ordered(lambda k: k * k, range(50), threads) == [k * k for k in range(50)]


def test_map_ordered_uses_workers() -> None:
    """Test that several threads actually run tasks."""
    seen = set()
    lock = threading.Lock()

    def record(_: int) -> None:
        with lock:
            seen.add(threading.get_ident())

    map_ordered(record, range(200), 4)
    assert len(seen) >= 1


def test_map_ordered_rejects_zero_threads() -> None:
    """Test that zero threads raise ValueError."""
    with pytest.raises(ValueError, match="threads"):
        map_ordered(str, [1, 2], 0)


def test_default_threads() -> None:
    """Test that the default thread count is positive."""
    assert default_threads() >= 1


def test_resolve_seed_precedence() -> None:
    """Test that the flag wins over the environment."""
    assert resolve_seed(3, {SEED_ENV: "9"}) == 3
    assert resolve_seed(None, {SEED_ENV: "9"}) == 9
    assert resolve_seed(None, {SEED_ENV: " "}) is None
    assert resolve_seed(None, {}) is None


def test_resolve_seed_from_process_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test that ECC_SEED is read from the process environment by default."""
    monkeypatch.setenv(SEED_ENV, "17")
    assert resolve_seed(None) == 17


def test_resolve_seed_rejects_text() -> None:
    """Test that a non-integer ECC_SEED raises ValueError."""
    with pytest.raises(ValueError, match="not an integer"):
        resolve_seed(None, {SEED_ENV: "abc"})


def test_run_config_requires_seed() -> None:
    """Test that a stochastic run without a seed is rejected."""
    with pytest.raises(ValueError, match="--seed"):
        RunConfig(subcommand="synth", needs_seed=True)
    config = RunConfig(subcommand="synth", seed=1, needs_seed=True, options={"n": 10})
    assert config.option("n") == 10
    assert config.option("missing", "fallback") == "fallback"


def test_run_config_rejects_zero_threads() -> None:
    """Test that zero threads are rejected."""
    with pytest.raises(ValueError, match="--threads"):
        RunConfig(subcommand="estimate", threads=0)
