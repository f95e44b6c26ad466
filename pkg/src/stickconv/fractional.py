"""Riemann-Liouville fractional integrals and derivatives on [0, 1].

Two representations:

* :class:`PowerSeriesFn`, finite sums ``sum c x^e`` with exponents ``> -1``.
  Coefficients are kept as a scalar times a product of Gamma values at
  canonical arguments in (0, 1), so the power rule composes exactly:
  ``D^a I^a x^b`` returns ``x^b`` with coefficient exactly 1.
* :class:`~stickconv.grid.GridFunction`, handled by product integration:
  the interpolant is integrated exactly against the singular kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from ._exact import fmt_rational, to_fraction
from .grid import GridFunction


class ConvergenceError(ArithmeticError):
    """A grid derivative changed too much when the grid was halved."""


@dataclass(frozen=True)
class FractionalOrder:
    alpha: Fraction

    def __post_init__(self):
        a = to_fraction(self.alpha)
        if a <= 0:
            raise ValueError(f"fractional order must be positive, got {a}")
        object.__setattr__(self, "alpha", a)

    @property
    def integer_part(self) -> int:
        return math.floor(self.alpha)

    @property
    def fractional_part(self) -> Fraction:
        return self.alpha - self.integer_part

    def __float__(self):
        return float(self.alpha)


def _order(alpha) -> FractionalOrder:
    return alpha if isinstance(alpha, FractionalOrder) else FractionalOrder(alpha)


# --------------------------------------------------------------------------
# exact coefficients


def _canonical_gamma(z: Fraction):
    """Write ``Gamma(z) = q * Gamma(r)`` with ``r`` in (0, 1]; return (q, r)."""
    if z <= 0 and z.denominator == 1:
        raise ValueError(f"Gamma has a pole at {z}")
    q = Fraction(1)
    while z > 1:
        z -= 1
        q *= z
    while z <= 0:
        q /= z
        z += 1
    return q, z


@dataclass(frozen=True)
class Coefficient:
    """``scalar * prod Gamma(r)^e`` over canonical arguments ``r`` in (0, 1)."""

    scalar: object = Fraction(1)
    gammas: tuple = ()

    @property
    def exact(self) -> bool:
        return isinstance(self.scalar, Fraction)

    def times(self, factor) -> "Coefficient":
        if isinstance(factor, (int, Fraction)) and self.exact:
            return Coefficient(self.scalar * Fraction(factor), self.gammas)
        return Coefficient(float(self.scalar) * float(factor), self.gammas)

    def times_gamma(self, z, power: int) -> "Coefficient":
        q, r = _canonical_gamma(to_fraction(z))
        out = self.times(q**power)
        if r == 1:
            return out
        g = dict(out.gammas)
        g[r] = g.get(r, 0) + power
        return Coefficient(out.scalar, tuple(sorted((k, e) for k, e in g.items() if e)))

    def value(self) -> float:
        v = float(self.scalar)
        for r, e in self.gammas:
            v *= math.gamma(r) ** e
        return v

    def __str__(self):
        s = fmt_rational(self.scalar) if self.exact else repr(self.scalar)
        for r, e in self.gammas:
            s += f"*Gamma({fmt_rational(r)})^{e}"
        return s


def _scalar(c):
    if isinstance(c, Coefficient):
        return c
    if isinstance(c, (int, Fraction)) or isinstance(c, str):
        return Coefficient(to_fraction(c))
    return Coefficient(float(c))


@dataclass(frozen=True)
class PowerSeriesFn:
    """Finite sum ``sum_i c_i x^{e_i}``, all ``e_i > -1``."""

    terms: tuple = ()

    def __post_init__(self):
        merged = {}
        for c, e in self.terms:
            c, e = _scalar(c), to_fraction(e)
            if e <= -1:
                raise ValueError(f"exponent {e} is not integrable at 0")
            key = (e, c.gammas)
            if key in merged:
                prev = merged[key]
                if prev.exact and c.exact:
                    merged[key] = Coefficient(prev.scalar + c.scalar, c.gammas)
                else:
                    merged[key] = Coefficient(float(prev.scalar) + float(c.scalar), c.gammas)
            else:
                merged[key] = c
        terms = tuple(
            (merged[k], k[0]) for k in sorted(merged, key=lambda k: (k[0], k[1])) if merged[k].scalar != 0
        )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def monomial(cls, exponent, coeff=1) -> "PowerSeriesFn":
        return cls(((coeff, exponent),))

    @classmethod
    def polynomial(cls, coeffs) -> "PowerSeriesFn":
        """``coeffs[k]`` multiplies ``x^k``."""
        return cls(tuple((c, k) for k, c in enumerate(coeffs)))

    @property
    def exact(self) -> bool:
        return all(c.exact for c, _ in self.terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, e in self.terms:
            out = out + c.value() * (np.ones_like(x) if e == 0 else x ** float(e))
        return out

    def __add__(self, other: "PowerSeriesFn") -> "PowerSeriesFn":
        return PowerSeriesFn(self.terms + other.terms)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "PowerSeriesFn":
        return PowerSeriesFn(tuple((c.times(factor), e) for c, e in self.terms))

    def scale_gamma(self, z, power: int) -> "PowerSeriesFn":
        return PowerSeriesFn(tuple((c.times_gamma(z, power), e) for c, e in self.terms))

    def shift(self, k) -> "PowerSeriesFn":
        """Multiply by ``x^k``."""
        k = to_fraction(k)
        return PowerSeriesFn(tuple((c, e + k) for c, e in self.terms))

    def derivative(self) -> "PowerSeriesFn":
        out = []
        for c, e in self.terms:
            if e == 0:
                continue
            if e - 1 <= -1:
                raise ValueError(f"derivative of x^{e} is not integrable at 0")
            out.append((c.times(e), e - 1))
        return PowerSeriesFn(tuple(out))

    def to_json(self):
        return [{"coeff": c.value(), "exact": str(c), "exponent": fmt_rational(e)} for c, e in self.terms]

    @classmethod
    def from_json(cls, items) -> "PowerSeriesFn":
        """Inverse of :meth:`to_json`; the ``exact`` field wins over ``coeff`` when present."""
        terms = []
        for t in items:
            c = _parse_coefficient(t["exact"]) if "exact" in t else Coefficient(float(t["coeff"]))
            terms.append((c, Fraction(t["exponent"])))
        return cls(tuple(terms))


def _parse_coefficient(text: str) -> Coefficient:
    head, *gammas = text.split("*Gamma(")
    scalar = Fraction(head) if "/" in head else float(head)
    out = []
    for g in gammas:
        r, e = g.split(")^")
        out.append((Fraction(r), int(e)))
    return Coefficient(scalar, tuple(out))


def _series_integral(f: PowerSeriesFn, a: Fraction) -> PowerSeriesFn:
    # I^a x^b = Gamma(b+1) / Gamma(b+1+a) x^(b+a)
    return PowerSeriesFn(
        tuple((c.times_gamma(e + 1, 1).times_gamma(e + 1 + a, -1), e + a) for c, e in f.terms)
    )


def _series_derivative(f: PowerSeriesFn, order: FractionalOrder) -> PowerSeriesFn:
    g = f
    frac = order.fractional_part
    if frac:
        g = _series_integral(g, 1 - frac)
        steps = order.integer_part + 1
    else:
        steps = order.integer_part
    for _ in range(steps):
        g = g.derivative()
    return g


# --------------------------------------------------------------------------
# grid path


def _second_difference(m: np.ndarray, s: float) -> np.ndarray:
    """``(m+1)^s - 2 m^s + (m-1)^s`` for ``m >= 1``, without cancellation."""
    inv = 1.0 / m
    with np.errstate(divide="ignore"):
        return m**s * (np.expm1(s * np.log1p(inv)) + np.expm1(s * np.log1p(-inv)))


def _product_weights(n: int, s: float):
    """Convolution weights of the product rule for kernel exponent ``s - 1``."""
    c = np.empty(n)
    c[0] = 1.0
    if n > 1:
        c[1:] = _second_difference(np.arange(1, n, dtype=float), s)
    return c


def _grid_integral(f: GridFunction, a: float) -> GridFunction:
    n = f.n_nodes
    k = np.arange(n, dtype=float)
    c = _product_weights(n, a + 1.0)
    b0 = np.zeros(n)
    b0[1:] = (k[1:] - 1.0) ** (a + 1.0) - (k[1:] - 1.0 - a) * k[1:] ** a
    out = np.asarray(kernels.rl_convolve(np.ascontiguousarray(f.values), c, b0), dtype=float)
    return f.with_values(out * f.h**a / math.gamma(a + 2.0))


def _fornberg(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the ``m``-th derivative at ``z`` from nodes ``x``."""
    n = x.size
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _fd_derivative(v: np.ndarray, h: float, m: int, accuracy: int = 4) -> np.ndarray:
    """``m``-th derivative on a uniform grid, stencils of ``m + accuracy`` nodes."""
    if m == 0:
        return np.array(v)
    n = v.size
    width = min(m + accuracy, n)
    half = width // 2
    offsets = np.arange(width, dtype=float)
    out = np.empty(n)
    interior = _fornberg(float(half), offsets, m)
    lo, hi = half, n - (width - half)
    if hi >= lo:
        windows = np.lib.stride_tricks.sliding_window_view(v, width)
        out[lo : hi + 1] = windows[: hi - lo + 1] @ interior
    for i in list(range(0, min(lo, n))) + list(range(max(hi + 1, lo), n)):
        start = min(max(i - half, 0), n - width)
        out[i] = v[start : start + width] @ _fornberg(float(i - start), offsets, m)
    return out / h**m


def _grid_frac_derivative_lt1(f: GridFunction, b: float) -> np.ndarray:
    """Order-``b`` derivative, ``0 <= b < 1``, at the nodes.

    ``D^b g = g(0) x^-b / Gamma(1-b) + I^(1-b)[g']`` with ``g'`` taken from
    the piecewise-quadratic interpolant (quadratic through nodes
    ``j-1, j, j+1`` on cell ``j``, through ``0, 1, 2`` on cell 0).  On each
    cell ``g'`` is linear, so the singular integral has closed-form weights.
    """
    v = f.values
    if b == 0:
        return np.array(v)
    n, h = v.size, f.h
    s = 1.0 - b
    slope = np.diff(v) / h
    curv = np.empty(n - 1)
    if n >= 3:
        curv[1:] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
        curv[0] = curv[1]
    else:
        curv[:] = 0.0
    m = np.arange(n - 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        # P1 = int_m^{m+1} t^-b dt, P2 = int_m^{m+1} t^(1-b) dt
        p1 = np.where(m > 0, m**s * np.expm1(s * np.log1p(1.0 / m)), 1.0) / s
        p2 = np.where(m > 0, m ** (s + 1) * np.expm1((s + 1) * np.log1p(1.0 / m)), 1.0) / (s + 1)
    wa = h**s * p1
    wb = h ** (s + 1) * ((m + 0.5) * p1 - p2)
    zeros = np.zeros(n)
    S = np.concatenate([[0.0], slope])
    C = np.concatenate([[0.0], curv])
    out = np.asarray(kernels.rl_convolve(S, np.append(wa, 0.0), zeros), dtype=float)
    out += np.asarray(kernels.rl_convolve(C, np.append(wb, 0.0), zeros), dtype=float)
    out /= math.gamma(s)
    f0 = v[0]
    if f0 != 0:
        with np.errstate(divide="ignore"):
            out += f0 * f.nodes ** (-b) / math.gamma(s)
    return out


def _grid_derivative_values(f: GridFunction, order: FractionalOrder) -> np.ndarray:
    v = _grid_frac_derivative_lt1(f, float(order.fractional_part))
    return _fd_derivative(v, f.h, order.integer_part)


def _grid_derivative(f: GridFunction, order: FractionalOrder, check: bool, rtol: float) -> GridFunction:
    v = _grid_derivative_values(f, order)
    if check and f.n_nodes >= 33 and f.n_nodes % 2 == 1:
        coarse = _grid_derivative_values(f.with_values(f.values[::2]), order)
        fine = v[::2]
        inner = slice(1, -1)
        scale = max(float(np.max(np.abs(fine[inner]))), 1e-300)
        gap = float(np.max(np.abs(fine[inner] - coarse[inner])))
        if not np.isfinite(gap) or gap > rtol * scale:
            raise ConvergenceError(
                f"order-{order.alpha} derivative moved by {gap:.3g} (relative {gap / scale:.3g}) under grid halving"
            )
    return GridFunction(v, f.lo, f.hi, allow_nonfinite=True)


# --------------------------------------------------------------------------
# public operators


def frac_integral(f, alpha):
    """``I^alpha f (x) = Gamma(alpha)^-1 int_0^x f(u) (x-u)^(alpha-1) du``."""
    order = _order(alpha)
    if isinstance(f, PowerSeriesFn):
        return _series_integral(f, order.alpha)
    if isinstance(f, GridFunction):
        if f.lo != 0.0:
            raise ValueError("grid functions must start at 0")
        return _grid_integral(f, float(order.alpha))
    raise TypeError(f"unsupported operand {type(f).__name__}")


def frac_derivative(f, alpha, check_convergence: bool = True, rtol: float = 1e-2):
    """``D^alpha f = d^{[alpha]+1} I^{1-{alpha}} f``.

    On grids the order-``{alpha}`` part integrates the derivative of the
    piecewise-quadratic interpolant against the exact kernel; the remaining
    integer orders use fourth-order finite differences.  The result is
    recomputed on every other node and :class:`ConvergenceError` is raised
    if the two disagree by more than ``rtol`` relative to the sup norm.
    """
    order = _order(alpha)
    if isinstance(f, PowerSeriesFn):
        return _series_derivative(f, order)
    if isinstance(f, GridFunction):
        if f.lo != 0.0:
            raise ValueError("grid functions must start at 0")
        return _grid_derivative(f, order, check_convergence, rtol)
    raise TypeError(f"unsupported operand {type(f).__name__}")
