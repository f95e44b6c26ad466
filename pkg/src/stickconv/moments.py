"""Moment transport between a stick law and its Bernoulli(p) convolution.

Forward: the stick moments determine those of ``Z`` through the
distributional identity ``Z = eps Y + (1 - Y) Z'``.  Backward: for
``p != 1/2`` the sequence ``b_n = (1 - E[(1-Y)^n]) / E[Y]`` solves a
triangular system whose coefficients depend only on the law of ``Z``.
Everything runs in exact rationals when the inputs are rational.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from ._exact import fmt_value, to_fraction
from .grid import write_columns
from .measures import FLOAT, RATIONAL, Measure, MomentVector, binomial_complement, binomial_mixed

FLOAT_PIVOT_FLOOR = 1e-13
HAUSDORFF_TOL = 1e-10
# the backward recursion roughly quadruples float roundoff per step
FLOAT_WINDOW_RTOL = 1e-6
HALF = Fraction(1, 2)


class NearSingularError(ArithmeticError):
    """A reconstruction pivot vanished or fell below the floating floor."""


class HalfNotIdentifiable(ValueError):
    """Reconstruction was requested at p = 1/2."""

    def __init__(self):
        super().__init__(
            "p = 1/2 cannot be inverted: distinct stick laws have identical "
            "Bernoulli(1/2) convolutions (use `construct` to build examples)"
        )


def _coerce_p(p, exact: bool):
    if exact:
        p = to_fraction(p)
    else:
        p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return p


def _exact_inputs(*vectors) -> bool:
    return all(v.exact for v in vectors)


# --------------------------------------------------------------------------
# forward direction


def forward_z_moments(mu, p, order: int, arithmetic=None) -> MomentVector:
    """Moments ``E[Z^0..Z^order]`` of the Bernoulli(p) convolution.

    ``mu`` is either a :class:`MomentVector` of the stick law or a
    :class:`Measure`; a measure contributes its own mixed-moment table,
    which for grid densities avoids the cancellation of reconstructing
    ``E[Y^j (1-Y)^k]`` from raw moments.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if isinstance(mu, Measure):
        from .measures import _resolve_arithmetic

        arithmetic = _resolve_arithmetic(mu, arithmetic)
        table = mu.mixed_table(order, arithmetic == RATIONAL)
    else:
        mu = mu.truncate(order)
        arithmetic = mu.arithmetic if arithmetic is None else arithmetic
        if arithmetic == RATIONAL and not mu.exact:
            raise ValueError("exact arithmetic requested for floating moments")
        vals = mu.values if arithmetic == RATIONAL else tuple(float(v) for v in mu.values)
        table = binomial_mixed(vals, order)
    exact = arithmetic == RATIONAL
    p = _coerce_p(p, exact)
    one = Fraction(1) if exact else 1.0
    ez = [one]
    for n in range(1, order + 1):
        denom = 1 - table[0][n]
        if denom == 0:
            raise ZeroDivisionError(f"1 - E[(1-Y)^{n}] vanishes: the stick law is concentrated at 0")
        acc = sum(comb(n, k) * table[n - k][k] * ez[k] for k in range(n))
        ez.append(p * acc / denom)
    return MomentVector(tuple(ez), arithmetic)


# --------------------------------------------------------------------------
# coefficients of the backward system


@dataclass(frozen=True)
class CoefficientTable:
    """``a[n][k] = (-1)^k p C(n,k) E[(1-Z)^k]`` and ``c[n] = (1-p) E[Z^n]``."""

    order: int
    p: object
    a: tuple
    c: tuple

    def pivot(self, n: int):
        return self.a[n][n] + self.c[n]


def coefficient_table(z_moments: MomentVector, p, order: int | None = None) -> CoefficientTable:
    order = z_moments.order if order is None else order
    z = z_moments.truncate(order).values
    p = _coerce_p(p, z_moments.exact)
    w = binomial_complement(z)
    a = tuple(tuple((-1) ** k * p * comb(n, k) * w[k] for k in range(n + 1)) for n in range(order + 1))
    c = tuple((1 - p) * z[n] for n in range(order + 1))
    return CoefficientTable(order, p, a, c)


def pivot(z_moments: MomentVector, p, n: int):
    """``a[n][n] + c[n]``, the divisor of step ``n`` of the backward recursion."""
    if n < 1:
        raise ValueError("pivots are defined for n >= 1")
    return coefficient_table(z_moments, p, n).pivot(n)


def stick_b_sequence(mu: MomentVector, order: int | None = None):
    """``b_n = (1 - E[(1-Y)^n]) / E[Y]`` from stick moments."""
    order = mu.order if order is None else order
    m = mu.truncate(order).values
    if m[1] == 0:
        raise ZeroDivisionError("E[Y] = 0")
    comp = binomial_complement(m)
    return [(1 - comp[n]) / m[1] for n in range(order + 1)]


def prop22_residual(mu_moments: MomentVector, z_moments: MomentVector, p, n: int):
    """``c_n b_n + sum_{k=1}^n a_{n,k} b_k`` with ``b`` taken from the stick moments.

    Vanishes exactly when the three inputs are consistent.
    """
    exact = _exact_inputs(mu_moments, z_moments)
    b = stick_b_sequence(mu_moments, n)
    if not exact:
        b = [float(v) for v in b]
        z_moments = MomentVector(tuple(float(v) for v in z_moments.values), FLOAT)
    t = coefficient_table(z_moments, p, n)
    return t.c[n] * b[n] + sum(t.a[n][k] * b[k] for k in range(1, n + 1))


# --------------------------------------------------------------------------
# Hausdorff moment condition


@dataclass(frozen=True)
class HausdorffResult:
    ok: bool
    violation: tuple | None = None  # (j, k, value of (-1)^k Delta^k m_j)

    def __bool__(self):
        return self.ok


def hausdorff_check(m: MomentVector, tol: float = HAUSDORFF_TOL) -> HausdorffResult:
    """Check ``(-1)^k Delta^k m_j >= 0`` for all ``j + k <= order``.

    Exact for rational vectors; floating vectors may dip to ``-tol``.
    """
    floor = 0 if m.exact else -tol
    row = list(m.values)
    for k in range(m.order + 1):
        for j, v in enumerate(row):
            if v < floor:
                return HausdorffResult(False, (j, k, v))
        row = [row[j] - row[j + 1] for j in range(len(row) - 1)]
    return HausdorffResult(True)


# --------------------------------------------------------------------------
# limit extraction for E[Y] = 1 / lim b_n


def _shanks(s):
    """Wynn epsilon, one step: exact for ``L - C r^n`` tails."""
    a, b, c = s
    den = (c - b) - (b - a)
    if den == 0:
        return None
    return c - (c - b) ** 2 / den


def _rho(xs, s, steps):
    """Wynn rho with abscissae ``xs``: exact for tails rational in ``n``."""
    prev = [0] * (len(s) + 1)
    cur = list(s)
    for k in range(1, steps + 1):
        nxt = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if d == 0:
                return None
            nxt.append(prev[i + 1] + (xs[i + k] - xs[i]) / d)
        prev, cur = cur, nxt
    return cur[0]


def _limit_candidates(b, exact):
    n_max = len(b) - 1
    if n_max >= 3 and b[n_max] == b[n_max - 1] == b[n_max - 2]:
        yield "constant", b[n_max]
    if n_max < 6:
        return
    windows = [n_max, n_max - 1, n_max - 2]

    def agree(vals):
        if any(v is None for v in vals):
            return False
        if exact:
            return vals[0] == vals[1] == vals[2]
        scale = max(abs(v) for v in vals)
        return max(vals) - min(vals) <= FLOAT_WINDOW_RTOL * scale

    vals = [_shanks(b[e - 2 : e + 1]) for e in windows]
    if agree(vals):
        yield "geometric", vals[0]
    for steps in (2, 4):
        if n_max - 2 - steps < 1:
            break
        vals = [_rho(list(range(e - steps, e + 1)), b[e - steps : e + 1], steps) for e in windows]
        if agree(vals):
            yield f"rational-{steps // 2}", vals[0]


def _moments_from_b(b, ey, exact):
    comp = [1 - bn * ey for bn in b]
    comp[0] = Fraction(1) if exact else 1.0
    m = binomial_complement(comp)
    return MomentVector(tuple(m), RATIONAL if exact else FLOAT)


# --------------------------------------------------------------------------
# reconstruction


@dataclass(frozen=True)
class ReconstructionReport:
    p: object
    order: int
    b: tuple
    ey: object
    ey_method: str
    ey_tail: object
    mu_moments: MomentVector
    pivots: tuple  # pivots[n] for n = 1..order, index 0 unused
    arithmetic: str
    hausdorff: HausdorffResult = field(repr=False)

    @property
    def pivot_magnitudes(self):
        return tuple(abs(v) for v in self.pivots[1:])

    def b_nondecreasing(self) -> bool:
        return all(self.b[n] <= self.b[n + 1] for n in range(len(self.b) - 1))

    def to_json(self) -> dict:
        return {
            "p": fmt_value(self.p),
            "order": self.order,
            "arithmetic": self.arithmetic,
            "b": [fmt_value(v) for v in self.b],
            "EY": fmt_value(self.ey),
            "EY_method": self.ey_method,
            "EY_tail_estimate": fmt_value(self.ey_tail),
            "mu_moments": self.mu_moments.to_json(),
            "pivot_magnitudes": [fmt_value(v) for v in self.pivot_magnitudes],
            "b_nondecreasing": self.b_nondecreasing(),
            "hausdorff_ok": self.hausdorff.ok,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def to_csv(self, path) -> None:
        pivots = [float("nan")] + [float(v) for v in self.pivots[1:]]
        write_columns(path, ("n", "b_n", "pivot_n"), [range(self.order + 1), [float(v) for v in self.b], pivots])


def reconstruct(z_moments: MomentVector, p, order: int | None = None) -> ReconstructionReport:
    """Recover the stick moments from the moments of ``Z``.

    ``E[Y] = 1 / lim b_n``.  The limit is read off exactly when the computed
    tail is constant, geometric or rational in ``n`` (checked on three
    overlapping windows and validated against the Hausdorff condition);
    otherwise ``1 / b_N`` is used, which for Beta(1, theta) sticks is off
    by ``O(1/N)``.
    """
    order = z_moments.order if order is None else order
    if order < 2:
        raise ValueError("reconstruction needs order >= 2")
    exact = z_moments.exact
    p = _coerce_p(p, exact)
    if p == HALF:
        raise HalfNotIdentifiable()
    if not 0 < p < 1:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    t = coefficient_table(z_moments, p, order)
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    b = [zero, one]
    pivots = [None, t.pivot(1)]
    for n in range(2, order + 1):
        piv = t.pivot(n)
        if piv == 0 or (not exact and abs(piv) < FLOAT_PIVOT_FLOOR):
            raise NearSingularError(f"pivot {n} is {float(piv):.3g}: near-singular at p close to 1/2")
        pivots.append(piv)
        b.append(-sum(t.a[n][k] * b[k] for k in range(1, n)) / piv)

    tail = one / b[-1]
    ey, method = tail, "tail"
    for name, limit in _limit_candidates(b, exact):
        if not limit > 0:
            continue
        cand = one / limit
        if b[-1] * cand > 1 + (0 if exact else 1e-12):
            continue
        mu = _moments_from_b(b, cand, exact)
        hs = hausdorff_check(mu)
        if hs.ok:
            ey, method = cand, name
            break
    mu = _moments_from_b(b, ey, exact)
    return ReconstructionReport(
        p=p,
        order=order,
        b=tuple(b),
        ey=ey,
        ey_method=method,
        ey_tail=tail,
        mu_moments=mu,
        pivots=tuple(pivots),
        arithmetic=RATIONAL if exact else FLOAT,
        hausdorff=hausdorff_check(mu),
    )
