"""Ordered parallel map over independent tasks."""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

_LOGGER = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_threads() -> int:
    """Return the number of logical cores, at least 1."""
    return os.cpu_count() or 1


def map_ordered(
    func: Callable[[T], R],
    items: Iterable[T],
    threads: int | None = None,
) -> list[R]:
    """Apply a function to every item and return results in input order.

    Args:
        func (Callable[[T], R]): Task function; must not share mutable state between calls.
        items (Iterable[T]): Task inputs.
        threads (int | None, optional): Worker count. 1 runs inline. Defaults to the logical core count.

    Returns:
        list[R]: One result per item, in the order of ``items``.

    Raises:
        ValueError: If threads is smaller than 1.

    """  # noqa: E501
    threads = default_threads() if threads is None else threads
    if threads < 1:
        msg = "threads must be at least 1"
        raise ValueError(msg)
    tasks = list(items)
    if threads == 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    msg = f"Running {len(tasks)} tasks on {threads} threads"
    _LOGGER.debug(msg)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, tasks))
