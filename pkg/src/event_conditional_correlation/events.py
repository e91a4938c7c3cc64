"""Event specifications over covariate columns.

An event A is declared as a predicate over one or more columns:

- ``gt:Z:1.5``            rows with Z > 1.5
- ``lt:Z:1.5``            rows with Z <= 1.5
- ``band:Z:0.4:0.1``      rows with Z in [Q_Z(0.3), Q_Z(0.4)), quantiles of the full sample
- ``rect:Z1:-1:1,Z2:0:2`` rows with -1 <= Z1 < 1 and 0 <= Z2 < 2

Quantile bands are closed on the left and open on the right, except the band
ending at the maximum (upper quantile 1), which is closed, so a sweep of
adjacent bands partitions the sample exactly.
"""  # noqa: E501

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import EventSpecError, InsufficientEventSampleError

if TYPE_CHECKING:
    from .sample import Sample

_LOGGER = logging.getLogger(__name__)

QuantileFunction = Callable[[str, float], float]

_PROBABILITY_DIGITS = 12


class EventKind(str, Enum):
    """Kinds of events, valued by their textual tag."""

    ABOVE = "gt"
    BELOW = "lt"
    BAND = "band"
    RECTANGLE = "rect"


@dataclass(frozen=True)
class Interval:
    """A one-dimensional interval with explicit endpoint closure."""

    lower: float
    upper: float
    lower_closed: bool = True
    upper_closed: bool = False

    def contains(self, values: np.ndarray) -> np.ndarray:
        """Return the membership mask of values in the interval."""
        values = np.asarray(values, dtype=float)
        above = values >= self.lower if self.lower_closed else values > self.lower
        below = values <= self.upper if self.upper_closed else values < self.upper
        return above & below


@dataclass(frozen=True)
class EventSpec:
    """Declarative event A over covariate columns.

    Use the constructors ``above``, ``below``, ``band`` and ``rectangle``
    rather than building instances directly.
    """

    kind: EventKind
    columns: tuple[str, ...]
    threshold: float = 0.0
    upper_quantile: float = 1.0
    width: float = 0.1
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        """Validate the event parameters for its kind."""
        if not self.columns:
            msg = "An event needs at least one target column."
            raise EventSpecError(msg)
        if self.kind in (EventKind.ABOVE, EventKind.BELOW, EventKind.BAND) and len(
            self.columns,
        ) != 1:
            msg = f"A {self.kind.value} event targets exactly one column."
            raise EventSpecError(msg)
        if self.kind in (EventKind.ABOVE, EventKind.BELOW) and math.isnan(
            self.threshold,
        ):
            msg = "Threshold must not be NaN."
            raise EventSpecError(msg)
        if self.kind is EventKind.BAND and not (
            0 < self.width <= self.upper_quantile <= 1
        ):
            msg = f"Quantile band needs 0 < width <= i <= 1, got i={self.upper_quantile}, width={self.width}."  # noqa: E501
            raise EventSpecError(msg)
        if self.kind is EventKind.RECTANGLE:
            if len(self.bounds) != len(self.columns):
                msg = "Rectangle needs one (lower, upper) pair per column."
                raise EventSpecError(msg)
            for column, (lower, upper) in zip(self.columns, self.bounds):
                if not lower < upper:
                    msg = f"Rectangle bounds for {column!r} need lower < upper, got {lower} and {upper}."  # noqa: E501
                    raise EventSpecError(msg)

    @classmethod
    def above(cls, column: str, threshold: float) -> EventSpec:
        """Event ``column > threshold``; ``threshold=-inf`` is the whole space."""
        return cls(EventKind.ABOVE, (column,), threshold=float(threshold))

    @classmethod
    def below(cls, column: str, threshold: float) -> EventSpec:
        """Event ``column <= threshold``."""
        return cls(EventKind.BELOW, (column,), threshold=float(threshold))

    @classmethod
    def band(cls, column: str, upper_quantile: float, width: float = 0.1) -> EventSpec:
        """Event ``column in [Q(i - width), Q(i))`` for the upper quantile ``i``."""
        return cls(
            EventKind.BAND,
            (column,),
            upper_quantile=round(float(upper_quantile), _PROBABILITY_DIGITS),
            width=round(float(width), _PROBABILITY_DIGITS),
        )

    @classmethod
    def rectangle(cls, bounds: Mapping[str, tuple[float, float]]) -> EventSpec:
        """Event ``lower <= column < upper`` for every column in the mapping."""
        return cls(
            EventKind.RECTANGLE,
            tuple(bounds),
            bounds=tuple((float(lo), float(hi)) for lo, hi in bounds.values()),
        )

    @classmethod
    def whole_space(cls, column: str) -> EventSpec:
        """Event holding for every finite row."""
        return cls.above(column, -math.inf)

    @property
    def lower_quantile(self) -> float:
        """Lower quantile level of a band."""
        return max(
            round(self.upper_quantile - self.width, _PROBABILITY_DIGITS),
            0.0,
        )

    @property
    def is_absolute(self) -> bool:
        """Whether the event bounds are fixed numbers rather than sample quantiles."""  # noqa: E501
        return self.kind is not EventKind.BAND

    def intervals(self, quantile: QuantileFunction | None = None) -> dict[str, Interval]:  # noqa: E501
        """Resolve the event into absolute per-column intervals.

        Args:
            quantile (QuantileFunction | None, optional): Maps (column, level) to a quantile value.
                Required for quantile bands. Defaults to None.

        Returns:
            dict[str, Interval]: Interval per target column.

        """  # noqa: E501
        if self.kind is EventKind.ABOVE:
            return {
                self.columns[0]: Interval(
                    self.threshold,
                    math.inf,
                    lower_closed=False,
                    upper_closed=True,
                ),
            }
        if self.kind is EventKind.BELOW:
            return {
                self.columns[0]: Interval(-math.inf, self.threshold, upper_closed=True),
            }
        if self.kind is EventKind.RECTANGLE:
            return {
                column: Interval(lower, upper)
                for column, (lower, upper) in zip(self.columns, self.bounds)
            }
        if quantile is None:
            msg = "Quantile bands need a quantile function to resolve their bounds."
            raise EventSpecError(msg)
        column = self.columns[0]
        return {
            column: Interval(
                quantile(column, self.lower_quantile),
                quantile(column, self.upper_quantile),
                upper_closed=self.upper_quantile >= 1.0,
            ),
        }

    def __str__(self) -> str:
        """Return the canonical textual form."""
        if self.kind in (EventKind.ABOVE, EventKind.BELOW):
            return f"{self.kind.value}:{self.columns[0]}:{_fmt(self.threshold)}"
        if self.kind is EventKind.BAND:
            return f"band:{self.columns[0]}:{_fmt(self.upper_quantile)}:{_fmt(self.width)}"  # noqa: E501
        parts = [
            f"{column}:{_fmt(lo)}:{_fmt(hi)}"
            for column, (lo, hi) in zip(self.columns, self.bounds)
        ]
        return "rect:" + ",".join(parts)


def _fmt(value: float) -> str:
    return repr(float(value))


def _to_float(text: str, source: str) -> float:
    try:
        return float(text)
    except ValueError:
        msg = f"Invalid number {text!r} in event {source!r}."
        raise EventSpecError(msg) from None


def parse_event(text: str) -> EventSpec:
    """Parse the canonical textual form of an event.

    Args:
        text (str): For example ``band:Z:0.4:0.1``, ``gt:Z:1.5`` or ``rect:Z1:-1:1,Z2:0:2``.

    Returns:
        EventSpec: The parsed event.

    Raises:
        EventSpecError: If the text is malformed.

    """  # noqa: E501
    tag, _, rest = text.strip().partition(":")
    try:
        kind = EventKind(tag)
    except ValueError:
        msg = f"Unknown event kind {tag!r} in {text!r}; expected one of gt, lt, band, rect."  # noqa: E501
        raise EventSpecError(msg) from None
    if kind is EventKind.RECTANGLE:
        bounds: dict[str, tuple[float, float]] = {}
        for part in rest.split(","):
            fields = part.split(":")
            if len(fields) != 3:  # noqa: PLR2004
                msg = f"Rectangle part {part!r} must read column:lower:upper."
                raise EventSpecError(msg)
            bounds[fields[0]] = (_to_float(fields[1], text), _to_float(fields[2], text))
        return EventSpec.rectangle(bounds)
    fields = rest.split(":")
    if kind is EventKind.BAND:
        if len(fields) != 3:  # noqa: PLR2004
            msg = f"Band event {text!r} must read band:column:i:width."
            raise EventSpecError(msg)
        return EventSpec.band(fields[0], _to_float(fields[1], text), _to_float(fields[2], text))  # noqa: E501
    if len(fields) != 2:  # noqa: PLR2004
        msg = f"Threshold event {text!r} must read {tag}:column:value."
        raise EventSpecError(msg)
    threshold = _to_float(fields[1], text)
    if kind is EventKind.ABOVE:
        return EventSpec.above(fields[0], threshold)
    return EventSpec.below(fields[0], threshold)


def sample_quantile(sample: Sample) -> QuantileFunction:
    """Return the type-7 empirical quantile function of a sample's columns."""

    def quantile(column: str, level: float) -> float:
        return float(np.quantile(sample.column(column), level))

    return quantile


def event_intervals(sample: Sample, event: EventSpec) -> dict[str, Interval]:
    """Resolve an event on a sample, quantiles taken over the full sample."""
    return event.intervals(sample_quantile(sample))


def mask_from_intervals(sample: Sample, intervals: Mapping[str, Interval]) -> np.ndarray:  # noqa: E501
    """Return the rows of a sample lying inside every interval."""
    mask = np.ones(sample.n, dtype=bool)
    for column, interval in intervals.items():
        mask &= interval.contains(sample.column(column))
    return mask


def event_mask(sample: Sample, event: EventSpec) -> np.ndarray:
    """Evaluate an event row-wise on a sample.

    Args:
        sample (Sample): The full available sample.
        event (EventSpec): The event; its target columns must exist in the sample.

    Returns:
        np.ndarray: Boolean membership mask of length n.

    Raises:
        InsufficientEventSampleError: If no row satisfies the event.

    """
    for column in event.columns:
        sample.index_of(column)
    mask = mask_from_intervals(sample, event_intervals(sample, event))
    count = int(mask.sum())
    if count == 0:
        raise InsufficientEventSampleError(0, 1)
    msg = f"Event {event} selects {count} of {sample.n} rows"
    _LOGGER.debug(msg)
    return mask


def event_mass(sample: Sample, event: EventSpec) -> float:
    """Return the empirical fraction of rows satisfying the event."""
    return float(event_mask(sample, event).mean())


def decile_sweep(
    sample: Sample,
    column: str | None = None,
    width: float = 0.1,
) -> list[tuple[float, EventSpec]]:
    """Build the contiguous quantile bands covering a column's support.

    Args:
        sample (Sample): The sample whose column is swept.
        column (str | None, optional): Column to sweep. Defaults to the single Z1 column.
        width (float, optional): Band width in quantile levels; must divide 1. Defaults to 0.1.

    Returns:
        list[tuple[float, EventSpec]]: Pairs (upper quantile i, band event) for i = width, ..., 1.

    """  # noqa: E501
    if column is None:
        if len(sample.z1) != 1:
            msg = "decile_sweep needs an explicit column unless Z1 is a single column"
            raise ValueError(msg)
        column = sample.z1[0]
    if not 0 < width <= 1:
        msg = "width must be in (0, 1]"
        raise ValueError(msg)
    bands = round(1 / width)
    if abs(bands * width - 1) > 1e-9:  # noqa: PLR2004
        msg = f"width {width} does not divide the unit interval"
        raise ValueError(msg)
    return [
        (
            round((k + 1) * width, _PROBABILITY_DIGITS),
            EventSpec.band(column, (k + 1) * width, width),
        )
        for k in range(bands)
    ]
