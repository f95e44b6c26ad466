"""Stick laws that share the Bernoulli(1/2) convolution of Beta(1, theta) sticks.

Two families are built here:

* theta = 2: any density with ``x rho(x) = (1-x) rho(1-x)`` (the reflection
  family of :class:`~stickconv.measures.SymmetricFamilyDensity`);
* general theta >= 1: ``rho = (1-x)^(theta-1) phi`` with
  ``phi = 2/Gamma(theta/2) D^(theta/2)[x^(theta/2) + x^(theta/2-1) eps(x)]``
  for a polynomial ``eps`` that is antisymmetric about 1/2.

:func:`verify_nonuniqueness` checks a candidate against Beta(theta/2,
theta/2) by moments, by Monte Carlo and by distance from Beta(1, theta).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from . import hoperator
from ._exact import to_fraction
from .fractional import PowerSeriesFn, frac_derivative, frac_integral
from .grid import GridFunction
from .measures import Beta, Dirac, Measure, SymmetricFamilyDensity, moments
from .moments import forward_z_moments
from .partition import ConvolutionSampleConfig, sample_bernoulli_convolution
from .stats import ks_one_sample

DEFAULT_NODES = (1 << 12) + 1
DELTA_FRACTION = Fraction(9, 10)
MASS_TOL = 1e-8
ROUNDTRIP_TOL = 1e-8


class ConstructionError(ValueError):
    pass


# --------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class PerturbationFn:
    """``eps(x) = delta * sum_k coeffs[k] x^k`` with ``coeffs[0] = 0``.

    ``delta = None`` asks :func:`construct_fractional` to pick the amplitude.
    """

    coeffs: tuple
    delta: float | None = None

    def __post_init__(self):
        c = tuple(to_fraction(v) for v in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if not c or c[0] != 0:
            raise ValueError("perturbation must vanish at 0 (zero constant term)")
        if any(v != -w for v, w in zip(c, reflect(c))):
            raise ValueError("perturbation must satisfy eps(1-x) = -eps(x)")
        object.__setattr__(self, "coeffs", c)

    def unit(self) -> PowerSeriesFn:
        return PowerSeriesFn.polynomial(self.coeffs)

    def __call__(self, x):
        d = 1.0 if self.delta is None else self.delta
        return d * self.unit()(x)


def reflect(coeffs):
    """Coefficients of ``p(1-x)`` from those of ``p(x)``."""
    d = len(coeffs) - 1
    out = [Fraction(0)] * (d + 1)
    for k, c in enumerate(coeffs):
        for i in range(k + 1):
            out[i] += c * comb(k, i) * (-1) ** i
    return tuple(out)


def default_perturbation(delta: float | None = None) -> PerturbationFn:
    """``delta x (1-x) (1-2x)``."""
    return PerturbationFn((0, 1, -3, 2), delta)


# --------------------------------------------------------------------------
# the polynomial-tilted Beta(1, theta) stick law


def _poly_extrema(coeffs: np.ndarray):
    """(min, max) of a polynomial on [0, 1]."""
    P = np.polynomial.Polynomial(coeffs)
    pts = [0.0, 1.0]
    if P.degree() >= 2:
        for r in P.deriv().roots():
            if abs(r.imag) < 1e-12 and 0 <= r.real <= 1:
                pts.append(float(r.real))
    vals = P(np.array(pts))
    return float(vals.min()), float(vals.max())


class TiltedBetaDensity(Measure):
    """Density ``(1-x)^(theta-1) phi(x)`` with polynomial ``phi >= 0``."""

    has_density = True

    def __init__(self, theta: float, phi_coeffs):
        self.theta = float(theta)
        self.c = np.asarray(phi_coeffs, dtype=float)
        self.phi_max = _poly_extrema(self.c)[1]

    def phi(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.c)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= 1)
        xc = np.clip(x, 0.0, 1.0)
        return np.where(inside, (1.0 - xc) ** (self.theta - 1.0) * self.phi(xc), 0.0)

    def mass(self) -> float:
        e = np.arange(self.c.size)
        return float(np.sum(self.c * beta_fn(e + 1.0, self.theta)))

    def mixed_table(self, order, exact):
        if exact:
            from .measures import MeasureError

            raise MeasureError("tilted Beta densities only support floating moments")
        e = np.arange(self.c.size)
        table = []
        for j in range(order + 1):
            row = []
            for k in range(order - j + 1):
                row.append(float(np.sum(self.c * beta_fn(j + e + 1.0, self.theta + k))))
            table.append(row)
        return table

    def raw_moments(self, order, exact):
        t = self.mixed_table(order, exact)
        return [t[n][0] for n in range(order + 1)]

    def draw(self, rng, size):
        """Rejection from Beta(1, theta) with acceptance ``phi / max phi``."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        out = np.empty(n)
        filled = 0
        ratio = self.theta / self.phi_max
        while filled < n:
            need = n - filled
            batch = int(need / max(ratio, 1e-3) * 1.1) + 16
            y = rng.beta(1.0, self.theta, size=batch)
            keep = y[rng.random(batch) * self.phi_max < self.phi(y)]
            take = min(keep.size, need)
            out[filled : filled + take] = keep[:take]
            filled += take
        return out.reshape(shape)

    def __repr__(self):
        return f"TiltedBetaDensity(theta={self.theta}, phi={self.c.tolist()})"


# --------------------------------------------------------------------------
# constructed measures


@dataclass(frozen=True, eq=False)
class ConstructedMeasure:
    rho: GridFunction
    phi: object
    theta: float
    provenance: str
    measure: Measure
    delta: float | None = None
    checks: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        meta = {"theta": self.theta, "provenance": self.provenance, "delta": self.delta, "checks": self.checks}
        if isinstance(self.phi, PowerSeriesFn):
            meta["phi"] = self.phi.to_json()
        return meta


def construct_gem2(f: GridFunction) -> ConstructedMeasure:
    """theta = 2 member built from ``f >= 0`` on [0, 1/2]."""
    nu = SymmetricFamilyDensity(f)
    # int rho/(1-u) du must be finite; by construction it equals 2
    q = hoperator.ConvolutionDensity.uniform(nu.grid.n_nodes)
    end = hoperator.apply_H(nu, q).values[-1]
    if not np.isfinite(end):
        raise ConstructionError("int rho(u)/(1-u) du diverges for this f")
    x = nu.grid.nodes
    # phi = rho / (1-x), written without the 0/0 at x = 1
    left = nu.f(np.minimum(x, 0.5)) / np.maximum(1.0 - x, 0.5)
    right = nu.f(np.clip(1.0 - x, 0.0, 0.5)) / np.maximum(x, 0.5)
    phi = GridFunction(np.where(x <= 0.5, left, right) / nu.norm)
    rho = GridFunction(nu.pdf(x))
    checks = {"int_rho_over_1_minus_u": float(end), "gem2_residual": float(np.max(np.abs(x * rho.values - (1 - x) * rho.values[::-1])))}
    return ConstructedMeasure(rho, phi, 2.0, "gem2-family", nu, None, checks)


def _series_to_poly(f: PowerSeriesFn) -> np.ndarray:
    deg = 0
    for _, e in f.terms:
        if e.denominator != 1 or e < 0:
            raise ConstructionError(f"phi has a non-polynomial term x^{e}")
        deg = max(deg, int(e))
    out = np.zeros(deg + 1)
    for c, e in f.terms:
        out[int(e)] += c.value()
    return out


def construct_fractional(theta, eps: PerturbationFn | None = None, n_nodes: int = DEFAULT_NODES) -> ConstructedMeasure:
    """General-theta member ``rho = (1-x)^(theta-1) phi``.

    ``phi`` is affine in the amplitude ``delta``: ``phi = theta + delta P``.
    When ``eps.delta`` is None the amplitude is 9/10 of the largest value
    keeping ``phi >= 0``, namely ``theta / max(-P)``.
    """
    th = to_fraction(theta)
    if th < 1:
        raise ConstructionError("the fractional construction needs theta >= 1")
    a = th / 2
    scale = PowerSeriesFn.monomial(0, 2).scale_gamma(a, -1)  # 2 / Gamma(a)
    gamma_factor = scale.terms[0][0]

    base = PowerSeriesFn(((gamma_factor, a),))
    phi0 = frac_derivative(base, a)
    if phi0 != PowerSeriesFn.monomial(0, th):
        raise ConstructionError("phi for eps = 0 is not the constant theta")

    if eps is None:
        unit = scaled = PowerSeriesFn()
        delta = 0.0
    else:
        scaled = eps.unit().shift(a - 1).scale_gamma(a, -1).scale(2)
        unit = frac_derivative(scaled, a)
        delta = eps.delta
        # exact roundtrip of the defining equation
        if frac_integral(unit, a) != scaled:
            raise ConstructionError("I^(theta/2) phi does not reproduce the perturbed bracket")

    p_coeffs = _series_to_poly(unit) if unit.terms else np.zeros(1)
    if delta is None:
        lo, _ = _poly_extrema(p_coeffs)
        if lo >= 0:
            raise ConstructionError("phi stays positive for every delta; supply delta explicitly")
        delta = float(DELTA_FRACTION) * float(th) / (-lo)
    coeffs = np.zeros(max(p_coeffs.size, 1))
    coeffs[: p_coeffs.size] = float(delta) * p_coeffs
    coeffs[0] += float(th)

    phi_min, _ = _poly_extrema(coeffs)
    if phi_min < 0:
        raise ConstructionError(f"phi dips to {phi_min:.3g} < 0: delta {delta} is too large")
    nu = TiltedBetaDensity(float(th), coeffs)
    mass = nu.mass()
    if abs(mass - 1.0) > MASS_TOL:
        raise ConstructionError(f"rho integrates to {mass!r}, not 1")

    # numeric residual of I^(theta/2) phi against the bracket, full amplitude
    phi_series = PowerSeriesFn.polynomial([float(c) for c in coeffs])
    xs = np.linspace(0.0, 1.0, 257)[1:]
    lhs = frac_integral(phi_series, a)(xs)
    rhs = base(xs) + float(delta) * scaled(xs)
    residual = float(np.max(np.abs(lhs - rhs)))
    if residual > ROUNDTRIP_TOL:
        raise ConstructionError(f"roundtrip residual {residual:.3g} exceeds {ROUNDTRIP_TOL}")

    x = np.linspace(0.0, 1.0, n_nodes)
    rho = GridFunction(nu.pdf(x))
    checks = {"mass": mass, "phi_min": phi_min, "roundtrip_residual": residual}
    return ConstructedMeasure(rho, phi_series, float(th), "fractional", nu, float(delta), checks)


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class NonuniquenessReport:
    theta: float
    moment_max_diff: float
    moment_tol: float
    moment_pass: bool
    ks: object
    distance: float | None
    distance_threshold: float
    distinct: bool

    @property
    def passed(self) -> bool:
        return self.moment_pass and self.ks.passed and self.distinct

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "moments": {"max_diff": self.moment_max_diff, "tol": self.moment_tol, "pass": self.moment_pass},
            "monte_carlo": self.ks.to_json(),
            "distinctness": {"sup_distance": self.distance, "threshold": self.distance_threshold, "pass": self.distinct},
            "pass": self.passed,
        }


def _stick_measure(nu):
    return nu.measure if isinstance(nu, ConstructedMeasure) else nu


def verify_nonuniqueness(
    nu,
    theta,
    order: int = 15,
    mc_samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    alpha: float = 0.01,
    moment_tol: float = 1e-6,
    distance_threshold: float = 1e-6,
    n_nodes: int = DEFAULT_NODES,
) -> NonuniquenessReport:
    """Moment, Monte Carlo and distinctness checks against Beta(theta/2, theta/2).

    ``nu`` may be a :class:`ConstructedMeasure` or a plain stick measure.
    A Dirac stick is distinct from any density, so its distance is reported
    as ``None`` with the check passing.
    """
    th = float(theta)
    mu = _stick_measure(nu)
    half = th / 2.0
    target = np.array([float(v) for v in moments(Beta(to_fraction(theta) / 2, to_fraction(theta) / 2), order, "float")])
    z = forward_z_moments(mu, Fraction(1, 2), order, "float")
    diff = float(np.max(np.abs(np.array(z.values) - target)))

    cfg = ConvolutionSampleConfig(Fraction(1, 2), mc_samples, seed)
    zs = sample_bernoulli_convolution(mu, cfg, workers)
    ks = ks_one_sample(zs, lambda t: betainc(half, half, np.clip(t, 0.0, 1.0)), alpha)

    if isinstance(mu, Dirac):
        dist, distinct = None, True
    else:
        x = np.linspace(0.0, 1.0, n_nodes)
        rho = mu.pdf(x)
        ref = th * (1.0 - x) ** (th - 1.0)
        dist = float(np.max(np.abs(rho - ref)))
        distinct = dist > distance_threshold
    return NonuniquenessReport(th, diff, moment_tol, diff <= moment_tol, ks, dist, distance_threshold, distinct)


def beta_stick(theta) -> Beta:
    return Beta(1, to_fraction(theta))
