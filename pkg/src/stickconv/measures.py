"""Probability measures on [0, 1] without an atom at 0.

Every measure exposes exact-rational moments when its parameters allow it,
floating moments otherwise, a mixed-moment table ``E[Y^j (1-Y)^k]`` and a
vectorised sampler.  Grid densities integrate their piecewise-linear
interpolant exactly (Gauss-Legendre per cell) instead of running a generic
adaptive quadrature: the interpolant *is* the measure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np

from . import _seeding
from ._exact import fmt_value, parse_value, to_fraction
from .grid import GridFunction

RATIONAL = "rational"
FLOAT = "float"


class MeasureError(ValueError):
    """Invalid measure specification."""


# --------------------------------------------------------------------------
# Moment vectors


@dataclass(frozen=True)
class MomentVector:
    """Moments ``(m_0, ..., m_N)`` of a [0,1]-valued random variable."""

    values: tuple
    arithmetic: str = RATIONAL

    def __post_init__(self):
        vals = tuple(self.values)
        if not vals:
            raise ValueError("a moment vector needs at least m_0")
        if self.arithmetic not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown arithmetic {self.arithmetic!r}")
        if self.arithmetic == RATIONAL:
            vals = tuple(to_fraction(v) for v in vals)
            if vals[0] != 1:
                raise ValueError(f"m_0 must be 1, got {vals[0]}")
        else:
            vals = tuple(float(v) for v in vals)
            if abs(vals[0] - 1.0) > 1e-12:
                raise ValueError(f"m_0 must be 1, got {vals[0]}")
        object.__setattr__(self, "values", vals)

    @property
    def order(self) -> int:
        return len(self.values) - 1

    @property
    def exact(self) -> bool:
        return self.arithmetic == RATIONAL

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def truncate(self, order: int) -> "MomentVector":
        if order > self.order:
            raise ValueError(f"only {self.order} moments available, need {order}")
        return MomentVector(self.values[: order + 1], self.arithmetic)

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def is_monotone(self, tol: float = 0.0) -> bool:
        v = self.values
        return all(v[i] + tol >= v[i + 1] for i in range(len(v) - 1)) and v[-1] + tol >= 0

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "arithmetic": self.arithmetic,
            "values": [fmt_value(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj) -> "MomentVector":
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        values = [parse_value(v) for v in obj["values"]]
        mv = cls(tuple(values), obj.get("arithmetic", RATIONAL))
        if "order" in obj and obj["order"] != mv.order:
            raise ValueError(f"order {obj['order']} does not match {len(values)} values")
        return mv


def binomial_complement(m, n_max=None):
    """``E[(1-Y)^n] = sum_i (-1)^i C(n,i) E[Y^i]`` for n = 0..n_max."""
    n_max = len(m) - 1 if n_max is None else n_max
    return [sum((-1) ** i * comb(n, i) * m[i] for i in range(n + 1)) for n in range(n_max + 1)]


def binomial_mixed(m, order):
    """Table ``t[j][k] = E[Y^j (1-Y)^k]`` for j + k <= order, from raw moments."""
    table = []
    for j in range(order + 1):
        row = []
        for k in range(order - j + 1):
            row.append(sum((-1) ** i * comb(k, i) * m[j + i] for i in range(k + 1)))
        table.append(row)
    return table


# --------------------------------------------------------------------------
# Measures


class Measure:
    """Base class: a probability law of the stick variable ``Y``."""

    supports_exact = False
    has_density = False

    def raw_moments(self, order: int, exact: bool):
        raise NotImplementedError

    def mixed_table(self, order: int, exact: bool):
        return binomial_mixed(self.raw_moments(order, exact), order)

    def draw(self, rng: np.random.Generator, size):
        raise NotImplementedError

    def mean(self) -> float:
        return float(self.raw_moments(1, self.supports_exact)[1])


@dataclass(frozen=True)
class Beta(Measure):
    a: Fraction
    b: Fraction

    supports_exact = True
    has_density = True

    def __post_init__(self):
        a, b = to_fraction(self.a), to_fraction(self.b)
        if a <= 0 or b <= 0:
            raise MeasureError(f"Beta parameters must be positive, got ({a}, {b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def raw_moments(self, order, exact):
        a, b = (self.a, self.b) if exact else (float(self.a), float(self.b))
        out = [Fraction(1) if exact else 1.0]
        for i in range(order):
            out.append(out[-1] * (a + i) / (a + b + i))
        return out

    def draw(self, rng, size):
        return rng.beta(float(self.a), float(self.b), size=size)

    def pdf(self, x):
        from scipy.special import beta as beta_fn

        x = np.asarray(x, dtype=float)
        a, b = float(self.a), float(self.b)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = x ** (a - 1) * (1 - x) ** (b - 1) / beta_fn(a, b)
        return np.where((x >= 0) & (x <= 1), out, 0.0)

    def cdf(self, x):
        from scipy.special import betainc

        return betainc(float(self.a), float(self.b), np.clip(np.asarray(x, dtype=float), 0, 1))

    def __str__(self):
        return f"beta:{self.a},{self.b}"


@dataclass(frozen=True)
class Uniform(Measure):
    supports_exact = True
    has_density = True

    def raw_moments(self, order, exact):
        return [Fraction(1, n + 1) if exact else 1.0 / (n + 1) for n in range(order + 1)]

    def draw(self, rng, size):
        return rng.random(size)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= 1), 1.0, 0.0)

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def __str__(self):
        return "uniform"


@dataclass(frozen=True)
class Dirac(Measure):
    atom: Fraction

    supports_exact = True

    def __post_init__(self):
        a = to_fraction(self.atom)
        if a == 0:
            raise MeasureError("Dirac(0) is excluded: measures may not have an atom at 0")
        if not 0 < a <= 1:
            raise MeasureError(f"Dirac atom must lie in (0, 1], got {a}")
        object.__setattr__(self, "atom", a)

    def raw_moments(self, order, exact):
        x = self.atom if exact else float(self.atom)
        return [x**n for n in range(order + 1)]

    def mixed_table(self, order, exact):
        x = self.atom if exact else float(self.atom)
        return [[x**j * (1 - x) ** k for k in range(order - j + 1)] for j in range(order + 1)]

    def draw(self, rng, size):
        return np.full(size, float(self.atom))

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= float(self.atom), 1.0, 0.0)

    def __str__(self):
        return f"dirac:{self.atom}"


def _gauss_cells(lo, h, n_cells, n_points):
    """Gauss-Legendre nodes/weights on each of ``n_cells`` uniform cells."""
    t, w = np.polynomial.legendre.leggauss(n_points)
    left = lo + h * np.arange(n_cells)[:, None]
    x = left + 0.5 * h * (t + 1.0)
    return x, np.broadcast_to(0.5 * h * w, x.shape), (t + 1.0) / 2.0


def _n_gauss(order):
    return max(12, order // 2 + 4)


class GridDensity(Measure):
    """Density given by its values at uniform nodes on [0, 1].

    The density between nodes is the piecewise-linear interpolant; the
    interpolant must integrate to 1 within ``1e-10``.
    """

    has_density = True
    NORM_TOL = 1e-10

    def __init__(self, grid: GridFunction):
        if grid.lo != 0.0 or grid.hi != 1.0:
            raise MeasureError("grid densities live on [0, 1]")
        if np.any(grid.values < 0):
            raise MeasureError("density is negative at some node")
        mass = grid.integral()
        if abs(mass - 1.0) > self.NORM_TOL:
            raise MeasureError(f"grid density is not normalised: integral = {mass!r}")
        self.grid = grid

    @classmethod
    def from_pdf(cls, pdf, n_nodes: int) -> "GridDensity":
        """Sample ``pdf`` at the nodes and rescale so the interpolant has mass 1."""
        g = GridFunction.from_function(pdf, n_nodes)
        return cls(g * (1.0 / g.integral()))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= 1), self.grid(x), 0.0)

    def _quadrature(self, order):
        g = self.grid
        x, w, s = _gauss_cells(0.0, g.h, g.n_nodes - 1, _n_gauss(order))
        v = g.values
        dens = v[:-1, None] + s[None, :] * (v[1:] - v[:-1])[:, None]
        return x.ravel(), (w * dens).ravel()

    def mixed_table(self, order, exact):
        if exact:
            raise MeasureError("grid densities only support floating moments")
        x, w = self._quadrature(order)
        P = np.vstack([x**j for j in range(order + 1)])
        Q = np.vstack([(1.0 - x) ** k for k in range(order + 1)])
        full = (P * w) @ Q.T
        return [[float(full[j, k]) for k in range(order - j + 1)] for j in range(order + 1)]

    def raw_moments(self, order, exact):
        t = self.mixed_table(order, exact)
        return [t[n][0] for n in range(order + 1)]

    def cdf_nodes(self) -> np.ndarray:
        v, h = self.grid.values, self.grid.h
        cells = 0.5 * h * (v[:-1] + v[1:])
        c = np.concatenate([[0.0], np.cumsum(cells)])
        return c / c[-1]

    def cdf(self, x):
        g = self.grid
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        c = self.cdf_nodes()
        j = np.minimum((x / g.h).astype(np.int64), g.n_nodes - 2)
        t = x - j * g.h
        d0 = g.values[j]
        slope = (g.values[j + 1] - d0) / g.h
        return np.clip(c[j] + (d0 * t + 0.5 * slope * t * t) * self._scale(), 0.0, 1.0)

    def _scale(self):
        v, h = self.grid.values, self.grid.h
        return 1.0 / (h * (v.sum() - 0.5 * (v[0] + v[-1])))

    def draw(self, rng, size):
        """Inverse-CDF sampling of the piecewise-linear interpolant."""
        g = self.grid
        u = rng.random(size)
        c = self.cdf_nodes()
        j = np.clip(np.searchsorted(c, u, side="right") - 1, 0, g.n_nodes - 2)
        r = (u - c[j]) / self._scale()
        d0 = g.values[j]
        slope = (g.values[j + 1] - d0) / g.h
        # d0 t + slope t^2 / 2 = r, solved without cancellation
        disc = np.sqrt(np.maximum(d0 * d0 + 2.0 * slope * r, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(d0 + disc > 0, 2.0 * r / (d0 + disc), 0.0)
        return np.clip(j * g.h + np.clip(t, 0.0, g.h), 0.0, 1.0)

    def __repr__(self):
        return f"GridDensity(n_nodes={self.grid.n_nodes})"


class SymmetricFamilyDensity(GridDensity):
    """Density built from ``f >= 0`` on [0, 1/2] by the reflection rule.

    ``rho(x) = f(x) / Z`` on [0, 1/2] and ``rho(x) = (1-x)/x f(1-x) / Z`` on
    (1/2, 1], with ``f`` the piecewise-linear interpolant of its nodes.
    The rule is applied between nodes as well, so ``x rho(x) = (1-x)
    rho(1-x)`` holds at every point, not only on the grid.
    """

    def __init__(self, f: GridFunction):
        if f.lo != 0.0 or abs(f.hi - 0.5) > 1e-15:
            raise MeasureError("the generating function must live on [0, 1/2]")
        if np.any(f.values < 0):
            raise MeasureError("generating function is negative at some node")
        if not np.any(f.values > 0):
            raise MeasureError("generating function is identically zero")
        self.f = f
        xq, wq = self._half_quadrature(0)
        self.norm = float(np.sum(wq / (1.0 - xq)))
        m = f.n_nodes
        x = np.linspace(0.0, 1.0, 2 * m - 1)
        vals = np.empty_like(x)
        vals[:m] = f.values / self.norm
        right = x[m:]
        vals[m:] = (1.0 - right) / right * f.values[m - 2 :: -1] / self.norm
        self.grid = GridFunction(vals)

    def _half_quadrature(self, order):
        f = self.f
        y, w, s = _gauss_cells(0.0, f.h, f.n_nodes - 1, _n_gauss(order))
        v = f.values
        fv = v[:-1, None] + s[None, :] * (v[1:] - v[:-1])[:, None]
        return y.ravel(), (w * fv).ravel()

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        left = self.f(np.minimum(x, 0.5))
        with np.errstate(divide="ignore", invalid="ignore"):
            right = np.where(x > 0, (1.0 - x) / x * self.f(np.clip(1.0 - x, 0.0, 0.5)), 0.0)
        out = np.where(x <= 0.5, left, right) / self.norm
        return np.where((x >= 0) & (x <= 1), out, 0.0)

    def mixed_table(self, order, exact):
        if exact:
            raise MeasureError("grid densities only support floating moments")
        y, w = self._half_quadrature(order)
        w = w / self.norm
        P = np.vstack([y**j for j in range(order + 1)])
        Q = np.vstack([(1.0 - y) ** k for k in range(order + 1)])
        # reflected half: E[(1-y)^(j-1) y^(k+1)] under f
        A = np.vstack([(1.0 - y) ** (j - 1) for j in range(order + 1)])
        B = np.vstack([y ** (k + 1) for k in range(order + 1)])
        full = (P * w) @ Q.T + (A * w) @ B.T
        return [[float(full[j, k]) for k in range(order - j + 1)] for j in range(order + 1)]

    def left_mass(self) -> float:
        y, w = self._half_quadrature(0)
        return float(np.sum(w)) / self.norm

    def draw(self, rng, size):
        """Exact sampling: mixture of the left half and a rejection step for the right."""
        size_t = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(size_t))
        half = GridDensity.__new__(GridDensity)
        half.grid = GridFunction(self.f.values)  # same shape on [0,1], rescaled below

        def draw_f(k):
            return 0.5 * half.draw(rng, k)

        out = np.empty(n)
        go_left = rng.random(n) < self.left_mass()
        n_left = int(go_left.sum())
        out[go_left] = draw_f(n_left)
        need = n - n_left
        right = []
        while need > 0:
            y = draw_f(2 * need + 16)
            accept = rng.random(y.size) < y / (1.0 - y)
            right.append(1.0 - y[accept])
            need -= int(accept.sum())
        if right:
            out[~go_left] = np.concatenate(right)[: n - n_left]
        return out.reshape(size_t)

    def __repr__(self):
        return f"SymmetricFamilyDensity(n_nodes={self.grid.n_nodes})"


# --------------------------------------------------------------------------
# Module-level operations


def _resolve_arithmetic(measure: Measure, arithmetic):
    if arithmetic is None:
        return RATIONAL if measure.supports_exact else FLOAT
    if arithmetic not in (RATIONAL, FLOAT):
        raise ValueError(f"unknown arithmetic {arithmetic!r}")
    if arithmetic == RATIONAL and not measure.supports_exact:
        raise MeasureError(f"{measure!r} has no exact-rational moments")
    return arithmetic


def moments(measure: Measure, order: int, arithmetic=None) -> MomentVector:
    """``(E[Y^0], ..., E[Y^order])``."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    arithmetic = _resolve_arithmetic(measure, arithmetic)
    return MomentVector(tuple(measure.raw_moments(order, arithmetic == RATIONAL)), arithmetic)


def complement_moments(measure: Measure, order: int, arithmetic=None) -> MomentVector:
    """``E[(1-Y)^n]`` for n = 0..order, by binomial expansion of the moments."""
    m = moments(measure, order, arithmetic)
    return MomentVector(tuple(binomial_complement(m.values)), m.arithmetic)


def mixed_moments(measure: Measure, order: int, arithmetic=None):
    """Triangular table ``t[j][k] = E[Y^j (1-Y)^k]`` for j + k <= order."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    arithmetic = _resolve_arithmetic(measure, arithmetic)
    return measure.mixed_table(order, arithmetic == RATIONAL)


def sample(measure: Measure, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """``count`` i.i.d. draws, reproducible from ``seed`` at any worker count."""
    return _seeding.run_chunked(lambda rng, n: measure.draw(rng, n), count, seed, workers)


def symmetric_family_density(f: GridFunction) -> SymmetricFamilyDensity:
    """Normalised density ``rho`` with ``x rho(x) = (1-x) rho(1-x)`` built from ``f``."""
    return SymmetricFamilyDensity(f)


def gem2_condition_residual(density, x=None) -> float:
    """``max |x rho(x) - (1-x) rho(1-x)|`` over the density's grid nodes."""
    if x is None:
        x = density.grid.nodes
    return float(np.max(np.abs(x * density.pdf(x) - (1 - x) * density.pdf(1 - x))))


# --------------------------------------------------------------------------
# Spec strings: beta:A,B  dirac:X  uniform  grid:<csv>  symfam:<csv>


class SpecParseError(MeasureError):
    def __init__(self, spec: str, column: int, message: str):
        self.spec, self.column = spec, column
        super().__init__(f"{message} (column {column + 1} of {spec!r})")


def _parse_rational(spec, text, column):
    try:
        return to_fraction(text)
    except ValueError:
        raise SpecParseError(spec, column, f"expected a rational, got {text!r}") from None


def parse_measure(spec: str) -> Measure:
    """Parse a measure spec string."""
    kind, sep, rest = spec.partition(":")
    kind = kind.strip().lower()
    body_col = len(kind) + 1
    if kind == "uniform" and not rest:
        return Uniform()
    if kind == "beta":
        parts = rest.split(",")
        if len(parts) != 2:
            raise SpecParseError(spec, body_col, "beta takes two parameters: beta:A,B")
        a = _parse_rational(spec, parts[0], body_col)
        b = _parse_rational(spec, parts[1], body_col + len(parts[0]) + 1)
        try:
            return Beta(a, b)
        except MeasureError as exc:
            raise SpecParseError(spec, body_col, str(exc)) from None
    if kind == "dirac":
        x = _parse_rational(spec, rest, body_col)
        try:
            return Dirac(x)
        except MeasureError as exc:
            raise SpecParseError(spec, body_col, str(exc)) from None
    if kind == "grid":
        return GridDensity(GridFunction.from_csv(rest))
    if kind == "symfam":
        return SymmetricFamilyDensity(GridFunction.from_csv(rest))
    raise SpecParseError(spec, 0, f"unknown measure kind {kind!r}")
