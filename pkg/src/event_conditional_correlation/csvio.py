"""CSV and JSON input and output.

Input CSV files are comma separated, UTF-8, with a mandatory header row and
``.`` as decimal separator. Dates, where present, are ISO-8601. Numbers are
written with 9 significant digits and JSON keys are sorted.
"""

from __future__ import annotations

import io
import json
import logging
import math
import re
import sys
from pathlib import Path
from typing import IO, TYPE_CHECKING, Any, Union

import numpy as np
import pandas as pd
from dateutil import parser as date_parser

from .exceptions import DataParseError
from .network import Panel
from .sample import Sample

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .network import Network

_LOGGER = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"
DATE_COLUMN = "date"

Source = Union[str, Path, IO[str], None]
_PANDAS_LINE = re.compile(r"line (\d+)")


def format_number(value: float | None) -> str:
    """Format a number with 9 significant digits; None becomes an empty string."""
    if value is None:
        return ""
    return f"{value:.9g}"


def _open_text(source: Source) -> IO[str]:
    if source is None or str(source) == "-":
        return sys.stdin
    if isinstance(source, (str, Path)):
        return Path(source).open(encoding="utf-8")  # noqa: SIM115
    return source


def read_table(source: Source, numeric: Sequence[str] | None = None) -> pd.DataFrame:
    """Read a CSV file with a header row.

    Args:
        source (Source): Path, open text stream, or None / ``-`` for standard input.
        numeric (Sequence[str] | None, optional): Columns that must be numeric. Defaults to
            every column except ``date``.

    Returns:
        pd.DataFrame: The table; numeric columns as float.

    Raises:
        DataParseError: If the file is empty, ragged, lacks a required column or
            holds a non-numeric value; the message names the 1-based line.

    """  # noqa: E501
    stream = _open_text(source)
    try:
        text = stream.read()
    finally:
        if isinstance(source, (str, Path)):
            stream.close()
    if not text.strip():
        msg = "input is empty; a header row is required"
        raise DataParseError(msg, line=1)
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.ParserError as err:
        found = _PANDAS_LINE.search(str(err))
        line = int(found.group(1)) if found else None
        msg = f"malformed CSV: {err}"
        raise DataParseError(msg, line=line) from err
    frame.columns = [str(c).strip() for c in frame.columns]
    if numeric is None:
        numeric = [c for c in frame.columns if c != DATE_COLUMN]
    missing = [c for c in numeric if c not in frame.columns]
    if missing:
        msg = f"missing column(s) {', '.join(missing)}; header has {', '.join(frame.columns)}"  # noqa: E501
        raise DataParseError(msg, line=1)
    for column in numeric:
        values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
        invalid = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))  # noqa: E501
        if invalid.any():
            row = int(np.flatnonzero(invalid)[0])
            msg = f"column {column!r} holds non-numeric value {frame[column].iloc[row]!r}"  # noqa: E501
            raise DataParseError(msg, line=row + 2)
        frame[column] = values.astype(float)
    msg = f"Read {len(frame)} rows with columns {', '.join(frame.columns)}"
    _LOGGER.debug(msg)
    return frame


def read_sample(
    source: Source,
    x: str = "x",
    y: str = "y",
    z1: Sequence[str] = ("z",),
    z2: Sequence[str] | None = None,
) -> Sample:
    """Read a CSV file into a Sample with the given roles."""
    z2 = tuple(z1) if z2 is None else tuple(z2)
    required = list(dict.fromkeys([x, y, *z1, *z2]))
    frame = read_table(source, required)
    return Sample.from_frame(frame[required], x=x, y=y, z1=z1, z2=z2)


def _dates(frame: pd.DataFrame) -> pd.DatetimeIndex | None:
    if DATE_COLUMN not in frame.columns:
        return None
    parsed = []
    for row, text in enumerate(frame[DATE_COLUMN]):
        try:
            parsed.append(date_parser.isoparse(text.strip()))
        except ValueError as err:
            msg = f"invalid ISO-8601 date {text!r}"
            raise DataParseError(msg, line=row + 2) from err
    return pd.DatetimeIndex(parsed)


def read_panel(residuals: Source, covariates: Source) -> Panel:
    """Read a residual CSV and a covariate CSV into a Panel.

    When both files have a ``date`` column they are inner-joined on it;
    otherwise rows are matched by position.

    Raises:
        DataParseError: If the files cannot be aligned.

    """
    left = read_table(residuals)
    right = read_table(covariates)
    left_dates, right_dates = _dates(left), _dates(right)
    if left_dates is not None and right_dates is not None:
        left = left.set_index(left_dates).drop(columns=DATE_COLUMN)
        right = right.set_index(right_dates).drop(columns=DATE_COLUMN)
        overlap = sorted(set(left.columns) & set(right.columns))
        if overlap:
            msg = f"column(s) {', '.join(overlap)} appear in both files"
            raise DataParseError(msg, line=1)
        joined = left.join(right, how="inner")
        if len(joined) < len(left) or len(joined) < len(right):
            msg = f"Dropped dates present in only one file; {len(joined)} common rows remain"  # noqa: E501
            _LOGGER.warning(msg)
        left, right = joined[left.columns], joined[right.columns]
        dates = pd.DatetimeIndex(joined.index)
    else:
        if len(left) != len(right):
            msg = f"residual and covariate files have {len(left)} and {len(right)} rows"
            raise DataParseError(msg)
        left = left.drop(columns=DATE_COLUMN, errors="ignore")
        right = right.drop(columns=DATE_COLUMN, errors="ignore")
        dates = left_dates if left_dates is not None else right_dates
    return Panel(
        residuals=left.to_numpy(dtype=float),
        covariates=right.to_numpy(dtype=float),
        assets=tuple(str(c) for c in left.columns),
        covariate_names=tuple(str(c) for c in right.columns),
        dates=dates,
    )


def _open_output(destination: Source) -> tuple[IO[str], bool]:
    if destination is None or str(destination) == "-":
        return sys.stdout, False
    if isinstance(destination, (str, Path)):
        return Path(destination).open("w", encoding="utf-8", newline=""), True  # noqa: SIM115
    return destination, False


def write_frame(frame: pd.DataFrame, destination: Source = None) -> None:
    """Write a frame as CSV with 9 significant digits."""
    stream, owned = _open_output(destination)
    try:
        frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    finally:
        if owned:
            stream.close()


def _plain(value: Any) -> Any:  # noqa: ANN401
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if not math.isfinite(value) else float(format_number(value))
    return value


def write_json(document: dict[str, Any], destination: Source = None) -> None:
    """Write a JSON document with sorted keys and 9 significant digits."""
    stream, owned = _open_output(destination)
    try:
        json.dump(_plain(document), stream, sort_keys=True, indent=2)
        stream.write("\n")
    finally:
        if owned:
            stream.close()


def edge_frame(network: Network) -> pd.DataFrame:
    """Return the nonzero edges of a network with columns i, j, weight, regime."""
    rows = []
    labels = network.labels
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            weight = float(network.weights[i, j])
            if weight != 0:
                rows.append(
                    {
                        "i": labels[i],
                        "j": labels[j],
                        "weight": weight,
                        "regime": network.regime.value,
                    },
                )
    return pd.DataFrame(rows, columns=["i", "j", "weight", "regime"])
