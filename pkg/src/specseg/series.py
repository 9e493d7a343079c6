"""Multivariate series container, CSV ingestion and the Fourier grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = [
    "MultivariateSeries",
    "FrequencyGrid",
    "FrequencyBand",
    "as_series",
    "load_csv",
    "write_csv",
    "demean",
    "fourier_grid",
]


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultivariateSeries:
    """T x p real observations, rows are time points.

    A one-dimensional input is treated as a single component.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InputError(f"expected a T x p matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise InputError(
                f"non-finite value at row {bad[0] + 1}, column {bad[1] + 1}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.T


def as_series(x) -> MultivariateSeries:
    if isinstance(x, MultivariateSeries):
        return x
    return MultivariateSeries(x)


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing frequencies inside (0, pi)."""

    frequencies: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        if w.ndim != 1 or w.size == 0:
            raise InputError("frequency grid must be a non-empty 1-d array")
        if np.any(w <= 0) or np.any(w >= np.pi):
            raise InputError("grid frequencies must lie in the open interval (0, pi)")
        if np.any(np.diff(w) <= 0):
            raise InputError("grid frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", _frozen(w))

    @property
    def count(self) -> int:
        return self.frequencies.size

    def __len__(self):
        return self.count


@dataclass(frozen=True)
class FrequencyBand:
    """Open frequency band ``lo < w < hi`` in radians."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (0.0 <= lo < hi <= math.pi):
            raise InputError(f"band must satisfy 0 <= lo < hi <= pi, got ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def parse(cls, text: str) -> "FrequencyBand":
        """Parse ``"lo:hi"`` (radians)."""
        try:
            lo, hi = (float(s) for s in text.split(":"))
        except ValueError as exc:
            raise InputError(f"band must be given as lo:hi, got {text!r}") from exc
        return cls(lo, hi)

    def mask(self, frequencies) -> np.ndarray:
        w = np.asarray(frequencies, dtype=float)
        return (w > self.lo) & (w < self.hi)

    def to_list(self):
        return [self.lo, self.hi]


def load_csv(path, has_header: bool = False) -> MultivariateSeries:
    """Read a comma separated file with one time point per row.

    Parameters
    ----------
    path : str or Path
        File to read (UTF-8).
    has_header : bool
        Skip the first row.

    Raises
    ------
    InputError
        On a missing file, ragged rows or a non-numeric cell. Row and column
        indices in messages are 1-based and count data rows only.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    rows = []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if has_header:
            next(reader, None)
        for i, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InputError(
                    f"row {i} has {len(row)} fields, expected {width}")
            vals = []
            for j, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"non-numeric value {cell.strip()!r} at row {i}, column {j}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise InputError(f"{path} contains no data rows")
    return MultivariateSeries(np.array(rows))


def write_csv(series, path, header=None) -> None:
    """Write a series so that :func:`load_csv` reads it back exactly."""
    series = as_series(series)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in series.values:
            writer.writerow([repr(float(v)) for v in row])


def demean(series) -> MultivariateSeries:
    """Subtract the column means."""
    v = as_series(series).values
    return MultivariateSeries(v - v.mean(axis=0))


def fourier_grid(T: int) -> FrequencyGrid:
    """Positive Fourier frequencies ``2*pi*j/T`` for ``j = 1..floor((T-1)/2)``."""
    if int(T) != T or T < 4:
        raise InputError(f"series length must be an integer >= 4, got {T}")
    T = int(T)
    j = np.arange(1, (T - 1) // 2 + 1)
    return FrequencyGrid(2.0 * np.pi * j / T)
