"""Column-labeled samples with designated roles.

A Sample holds an ``n x d`` numeric matrix together with the columns playing
the roles X, Y and the covariate blocks Z1 and Z2. The covariate blocks may
share columns with each other and with X or Y.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .exceptions import DimensionMismatchError, InsufficientEventSampleError

MIN_ROWS = 3


@dataclass(frozen=True, eq=False)
class Sample:
    """A numeric sample with role assignments.

    Attributes:
        data (np.ndarray): Float matrix of shape (n, d).
        columns (tuple[str, ...]): Column labels, one per column of data.
        x (str | None): Column playing the role X.
        y (str | None): Column playing the role Y.
        z1 (tuple[str, ...]): Columns of the covariate block regressed against X.
        z2 (tuple[str, ...]): Columns of the covariate block regressed against Y.

    """

    data: np.ndarray
    columns: tuple[str, ...]
    x: str | None = None
    y: str | None = None
    z1: tuple[str, ...] = ()
    z2: tuple[str, ...] = ()
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate shapes and role assignments."""
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:  # noqa: PLR2004
            msg = "data must be a two-dimensional matrix"
            raise ValueError(msg)
        if data.shape[1] != len(self.columns):
            msg = f"data has {data.shape[1]} columns but {len(self.columns)} labels were given"  # noqa: E501
            raise DimensionMismatchError(msg)
        if len(set(self.columns)) != len(self.columns):
            msg = "column labels must be unique"
            raise ValueError(msg)
        if data.shape[0] < MIN_ROWS:
            raise InsufficientEventSampleError(data.shape[0], MIN_ROWS)
        if not np.all(np.isfinite(data)):
            msg = "data contains missing or non-finite values"
            raise ValueError(msg)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "z1", tuple(self.z1))
        object.__setattr__(self, "z2", tuple(self.z2))
        object.__setattr__(
            self,
            "_index",
            {name: i for i, name in enumerate(self.columns)},
        )
        for role in (self.x, self.y, *self.z1, *self.z2):
            if role is not None and role not in self._index:
                msg = f"Role column {role!r} is not a column of the sample."
                raise ValueError(msg)

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        x: str | None = None,
        y: str | None = None,
        z1: Sequence[str] = (),
        z2: Sequence[str] | None = None,
    ) -> Sample:
        """Build a Sample from a data frame of numeric columns.

        Args:
            frame (pd.DataFrame): Numeric columns; the column labels become the sample labels.
            x (str | None, optional): Column playing X. Defaults to None.
            y (str | None, optional): Column playing Y. Defaults to None.
            z1 (Sequence[str], optional): Covariate block for X. Defaults to ().
            z2 (Sequence[str] | None, optional): Covariate block for Y. Defaults to z1.

        Returns:
            Sample: The sample.

        """  # noqa: E501
        return cls(
            data=frame.to_numpy(dtype=float),
            columns=tuple(str(c) for c in frame.columns),
            x=x,
            y=y,
            z1=tuple(z1),
            z2=tuple(z1 if z2 is None else z2),
        )

    @property
    def n(self) -> int:
        """Number of rows."""
        return int(self.data.shape[0])

    @property
    def z_columns(self) -> tuple[str, ...]:
        """Ordered union of the Z1 and Z2 blocks."""
        return tuple(dict.fromkeys((*self.z1, *self.z2)))

    def index_of(self, column: str) -> int:
        """Return the position of a column.

        Raises:
            KeyError: If the column does not exist.

        """
        try:
            return self._index[column]
        except KeyError:
            msg = f"Unknown column {column!r}; available: {', '.join(self.columns)}"
            raise KeyError(msg) from None

    def column(self, column: str) -> np.ndarray:
        """Return one column as a vector."""
        return self.data[:, self.index_of(column)]

    def block(self, columns: Sequence[str]) -> np.ndarray:
        """Return several columns as an ``(n, k)`` matrix."""
        return self.data[:, [self.index_of(c) for c in columns]]

    def require_roles(self) -> None:
        """Check that X, Y, Z1 and Z2 are assigned and the Z blocks match in dimension."""  # noqa: E501
        if self.x is None or self.y is None:
            msg = "Sample needs both X and Y roles assigned."
            raise ValueError(msg)
        if not self.z1 or not self.z2:
            msg = "Sample needs non-empty Z1 and Z2 covariate blocks."
            raise ValueError(msg)
        if len(self.z1) != len(self.z2):
            msg = f"Z1 and Z2 must have the same dimension, got {len(self.z1)} and {len(self.z2)}."  # noqa: E501
            raise DimensionMismatchError(msg)

    def subset(self, mask: np.ndarray) -> Sample:
        """Return the rows selected by a boolean mask.

        Raises:
            InsufficientEventSampleError: If fewer than three rows are selected.

        """
        mask = np.asarray(mask, dtype=bool)
        count = int(mask.sum())
        if count < MIN_ROWS:
            raise InsufficientEventSampleError(count, MIN_ROWS)
        return replace(self, data=self.data[mask])

    def take(self, indices: np.ndarray) -> Sample:
        """Return the rows at the given positions, repetitions allowed."""
        return replace(self, data=self.data[np.asarray(indices)])

    def with_roles(
        self,
        x: str | None = None,
        y: str | None = None,
        z1: Sequence[str] | None = None,
        z2: Sequence[str] | None = None,
    ) -> Sample:
        """Return the same data with some roles reassigned."""
        new_z1 = self.z1 if z1 is None else tuple(z1)
        return replace(
            self,
            x=self.x if x is None else x,
            y=self.y if y is None else y,
            z1=new_z1,
            z2=(self.z2 if z1 is None else new_z1) if z2 is None else tuple(z2),
        )

    def to_frame(self) -> pd.DataFrame:
        """Return the data as a data frame."""
        return pd.DataFrame(self.data, columns=list(self.columns))
