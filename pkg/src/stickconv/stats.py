"""Kolmogorov-Smirnov tests and empirical moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridFunction
from .measures import FLOAT, MomentVector

MIN_SAMPLES = 50
SERIES_TERMS = 100


class SampleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n: int
    p_value: float
    passed: bool
    alpha: float

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "n": self.n,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "pass": self.passed,
        }


def kolmogorov_sf(lam: float) -> float:
    """``P(K > lam)`` for the Kolmogorov limit law.

    Uses ``2 sum (-1)^(k-1) exp(-2 k^2 lam^2)`` (100 terms) for ``lam >= 1``
    and the Jacobi theta form of the CDF below, where the alternating series
    converges slowly.
    """
    if lam <= 0:
        return 1.0
    k = np.arange(1, SERIES_TERMS + 1, dtype=float)
    if lam < 1.0:
        odd = 2.0 * k - 1.0
        cdf = math.sqrt(2.0 * math.pi) / lam * float(np.sum(np.exp(-(odd**2) * math.pi**2 / (8.0 * lam * lam))))
        return min(1.0, max(0.0, 1.0 - cdf))
    signs = np.where(k % 2 == 1, 1.0, -1.0)
    sf = 2.0 * float(np.sum(signs * np.exp(-2.0 * k * k * lam * lam)))
    return min(1.0, max(0.0, sf))


def _as_cdf(cdf):
    if isinstance(cdf, GridFunction):
        return cdf
    if callable(cdf):
        return cdf
    raise TypeError("cdf must be callable or a GridFunction")


def ks_one_sample(samples, cdf, alpha: float = 0.01) -> KsReport:
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < MIN_SAMPLES:
        raise SampleSizeError(f"need at least {MIN_SAMPLES} samples, got {n}")
    F = np.asarray(_as_cdf(cdf)(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    d = min(max(d, 0.0), 1.0)
    p = kolmogorov_sf(math.sqrt(n) * d)
    return KsReport(d, n, p, p >= alpha, alpha)


def two_sample_ks(samples_a, samples_b, alpha: float = 0.01) -> KsReport:
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    n, m = a.size, b.size
    if min(n, m) < MIN_SAMPLES:
        raise SampleSizeError(f"need at least {MIN_SAMPLES} samples in each group, got {n} and {m}")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / n
    fb = np.searchsorted(b, grid, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    p = kolmogorov_sf(math.sqrt(n * m / (n + m)) * d)
    return KsReport(d, n + m, p, p >= alpha, alpha)


@dataclass(frozen=True)
class EmpiricalMoments:
    moments: MomentVector
    half_widths: tuple  # 5 sigma_k / sqrt(n), index 0 is 0

    def covers(self, exact, k: int) -> bool:
        return abs(self.moments[k] - float(exact)) <= self.half_widths[k]


def _mean(v: np.ndarray) -> float:
    # shifting by the first value makes constant samples exact
    return float(v[0] + np.mean(v - v[0]))


def empirical_moments(samples, order: int) -> EmpiricalMoments:
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < MIN_SAMPLES:
        raise SampleSizeError(f"need at least {MIN_SAMPLES} samples, got {n}")
    vals, widths = [1.0], [0.0]
    for k in range(1, order + 1):
        xk = x**k
        mk = _mean(xk)
        sigma = float(np.std(xk - xk[0], ddof=1))
        vals.append(mk)
        widths.append(5.0 * sigma / math.sqrt(n))
    return EmpiricalMoments(MomentVector(tuple(vals), FLOAT), tuple(widths))
