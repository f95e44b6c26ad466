"""Uniform-grid functions with piecewise-linear interpolation."""
from __future__ import annotations

import csv
import contextlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridFormatError(ValueError):
    """Malformed grid CSV; the message carries the offending line."""


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of a real function at uniform nodes on ``[lo, hi]``.

    Between nodes the function is the piecewise-linear interpolant.
    """

    values: np.ndarray
    lo: float = 0.0
    hi: float = 1.0
    allow_nonfinite: bool = field(default=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a grid function needs at least 2 nodes")
        if not self.hi > self.lo:
            raise ValueError("grid interval must have hi > lo")
        if not self.allow_nonfinite and not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, n_nodes: int, lo: float = 0.0, hi: float = 1.0):
        x = np.linspace(lo, hi, n_nodes)
        return cls(np.asarray(fn(x), dtype=float) * np.ones_like(x), lo, hi)

    @property
    def n_nodes(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_nodes)

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    def integral(self) -> float:
        """Exact integral of the interpolant (composite trapezoid)."""
        v = self.values
        return float(self.h * (v.sum() - 0.5 * (v[0] + v[-1])))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.lo, self.hi, self.allow_nonfinite)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def _check_same_grid(self, other):
        if (other.n_nodes, other.lo, other.hi) != (self.n_nodes, self.lo, self.hi):
            raise ValueError("grid functions live on different grids")

    def sup_distance(self, other: "GridFunction") -> float:
        self._check_same_grid(other)
        return float(np.max(np.abs(self.values - other.values)))

    def to_csv(self, path, header=("x", "value")) -> None:
        write_columns(path, header, [self.nodes, self.values])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        x, v = read_xy_csv(path)
        return cls(v, float(x[0]), float(x[-1]))


@contextlib.contextmanager
def open_output(target):
    """Yield a text stream for a path, or ``target`` itself if it is already one."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def write_columns(path, header, columns) -> None:
    with open_output(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([str(int(c)) if isinstance(c, (int, np.integer)) else repr(float(c)) for c in row])


def read_xy_csv(path):
    """Read a two-column ``x,value`` CSV with a header and uniform x."""
    path = Path(path)
    xs, vs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise GridFormatError(f"{path}: empty file") from None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise GridFormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                raise GridFormatError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
    if len(xs) < 2:
        raise GridFormatError(f"{path}: need at least 2 data rows")
    x = np.array(xs)
    steps = np.diff(x)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12) or steps[0] <= 0:
        raise GridFormatError(f"{path}: x column must be uniformly increasing")
    return x, np.array(vs)
