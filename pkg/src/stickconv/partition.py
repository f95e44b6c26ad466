"""Stick-breaking partitions and Monte Carlo Bernoulli(p) convolutions."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _seeding, kernels
from ._exact import to_fraction
from .grid import open_output, write_columns
from .measures import Measure

MAX_PARTS = 10**7
DEFAULT_TOL = 1e-12
_BLOCK = 48


class NonTerminationError(RuntimeError):
    """The unallocated mass failed to drop below the tolerance."""


@dataclass(frozen=True)
class Partition:
    parts: np.ndarray
    remainder: float
    truncation_tol: float

    def __post_init__(self):
        parts = np.asarray(self.parts, dtype=float)
        parts.setflags(write=False)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "remainder", float(self.remainder))

    @property
    def size(self) -> int:
        return self.parts.size

    def total(self) -> float:
        return float(self.parts.sum()) + self.remainder

    def to_csv(self, path) -> None:
        with open_output(path) as fh:
            fh.write("index,part\n")
            for i, x in enumerate(self.parts, start=1):
                fh.write(f"{i},{float(x)!r}\n")
            fh.write(f"remainder,{self.remainder!r}\n")


@dataclass(frozen=True)
class ConvolutionSampleConfig:
    p: Fraction
    samples: int
    seed: int
    truncation_tol: float = DEFAULT_TOL

    def __post_init__(self):
        p = to_fraction(self.p)
        if not 0 < p < 1:
            raise ValueError(f"p must lie in (0, 1), got {p}")
        if not 0 < self.truncation_tol <= 1e-6:
            raise ValueError(f"truncation_tol must lie in (0, 1e-6], got {self.truncation_tol}")
        if self.samples < 0:
            raise ValueError("samples must be nonnegative")
        object.__setattr__(self, "p", p)


def _check_tol(tol):
    if not 0 < tol <= 1e-6:
        raise ValueError(f"tol must lie in (0, 1e-6], got {tol}")


def sample_partition(measure: Measure, tol: float = DEFAULT_TOL, seed: int = 0) -> Partition:
    """Break sticks until the unallocated mass drops below ``tol``."""
    _check_tol(tol)
    rng = _seeding.chunk_rng(seed, 0)
    parts = []
    rem = 1.0
    while rem >= tol:
        if len(parts) >= MAX_PARTS:
            raise NonTerminationError(
                f"stopped after {MAX_PARTS} parts with unallocated mass {rem:.3g}; "
                "the stick law puts too much weight near 0"
            )
        for y in measure.draw(rng, 1024):
            parts.append(rem * y)
            rem *= 1.0 - y
            if rem < tol:
                break
    return Partition(np.array(parts), rem, tol)


def _z_chunk(measure, p, tol, rng, n, with_stats=False):
    z = np.zeros(n)
    rem = np.ones(n)
    count = np.zeros(n, dtype=np.int64)
    active = np.arange(n, dtype=np.int64)
    while active.size:
        Y = np.ascontiguousarray(measure.draw(rng, (active.size, _BLOCK)), dtype=float)
        U = rng.random((active.size, _BLOCK))
        still = np.asarray(kernels.stick_accumulate(Y, U, p, tol, z, rem, count, active), dtype=bool)
        active = active[still]
        if active.size and count[active].max() > MAX_PARTS:
            raise NonTerminationError(
                f"a sample used more than {MAX_PARTS} parts; the stick law puts too much weight near 0"
            )
    return (z, rem, count) if with_stats else z


def sample_bernoulli_convolution(measure: Measure, config: ConvolutionSampleConfig, workers: int = 1):
    """Monte Carlo draws of ``Z = sum eps_i X_i``.

    Marks are ``eps_i = [u_i < p]`` for shared uniforms ``u_i``, so runs with
    the same seed and different ``p`` are monotonically coupled.
    """
    p = float(config.p)
    tol = config.truncation_tol
    return _seeding.run_chunked(lambda rng, n: _z_chunk(measure, p, tol, rng, n), config.samples, config.seed, workers)


def write_z_csv(path, z) -> None:
    write_columns(path, ("z",), [z])
