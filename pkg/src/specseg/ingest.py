"""Loading, validation and preprocessing of multivariate time series.

Conventions used throughout the package: series are indexed 0-based (array
convention); time points, blocks and Fourier frequencies are indexed 1-based
(so block ``b`` covers times ``(b-1)*L+1 .. b*L``).
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, DimensionError, ParseError, ShapeError


@dataclass(frozen=True)
class SeriesMatrix:
    """A p x N real observation matrix; row i is component series i."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"expected a 2-d array, got ndim={v.ndim}")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise DimensionError(
                f"need p >= 1 and N >= 2, got p={v.shape[0]}, N={v.shape[1]}"
            )
        if not np.all(np.isfinite(v)):
            i, n = np.argwhere(~np.isfinite(v))[0]
            raise ParseError(
                f"non-finite value in series {i} at time {n + 1}", row=int(i), column=int(n)
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def n_times(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class BlockPlan:
    """Partition of 1..N into B = floor(N/L) blocks of length L.

    ``boundaries[b] = L*b``; block b covers times boundaries[b-1]+1 ..
    boundaries[b].  The trailing N - B*L observations take no part in any
    spectral computation.
    """

    L: int
    B: int
    boundaries: np.ndarray = field(repr=False)

    @property
    def n_used(self):
        return self.B * self.L


def load_csv(path, orientation="columns"):
    """Read a CSV file into a :class:`SeriesMatrix`.

    orientation:
        ``"rows"``    -- each row of the file is one series;
        ``"columns"`` -- each column is one series (typical tabular layout).

    One leading header row and/or one leading label column are skipped when
    any of their cells fail to parse as a number.  Any other non-numeric
    cell is an error reported with its (1-based) file coordinates.
    """
    if orientation not in ("rows", "columns"):
        raise ConfigError(f"orientation must be 'rows' or 'columns', got {orientation!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DimensionError(f"{path}: empty file")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ShapeError(
                f"{path}: row {i + 1} has {len(row)} cells, expected {width}"
            )

    def _is_number(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    row_offset = 0
    if not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
        row_offset = 1
        if not rows:
            raise DimensionError(f"{path}: no data rows below the header")
    col_offset = 0
    if not all(_is_number(r[0]) for r in rows):
        rows = [r[1:] for r in rows]
        col_offset = 1
        if not rows[0]:
            raise DimensionError(f"{path}: no data columns beside the labels")

    data = np.empty((len(rows), len(rows[0])), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: cannot parse cell {cell!r} at row {i + 1 + row_offset}, "
                    f"column {j + 1 + col_offset}",
                    row=i + row_offset,
                    column=j + col_offset,
                ) from None

    if orientation == "columns":
        data = data.T
    return SeriesMatrix(data)


def normal_quantile_transform(x):
    """Map each series through the normal quantile of its empirical CDF.

    Value v of a series with N observations maps to ``ndtri((r - 1/2)/N)``
    where r counts observations <= v (right-continuous empirical CDF), which
    shrinks the effect of heavy tails while preserving within-series ranks.
    """
    if x.n_times < 2:
        raise DimensionError("normal quantile transform needs N >= 2")
    n = x.n_times
    out = np.empty_like(x.values)
    for i in range(x.p):
        row = x.values[i]
        order = np.sort(row)
        r = np.searchsorted(order, row, side="right")
        out[i] = ndtri((r - 0.5) / n)
    return SeriesMatrix(out)


def center_series(x):
    """Subtract each series' sample mean (spectral analysis assumes mean zero)."""
    return SeriesMatrix(x.values - x.values.mean(axis=1, keepdims=True))


def partition_blocks(x, L):
    """Partition the time index set into B = floor(N/L) blocks of length L."""
    n = x.n_times
    if not (2 <= L <= n / 2):
        raise ConfigError(f"block length must satisfy 2 <= L <= N/2, got L={L}, N={n}")
    b = n // L
    return BlockPlan(L=int(L), B=int(b), boundaries=np.arange(b + 1, dtype=np.int64) * L)
