"""The operator ``[H rho](x) = q(x)^-1 int_0^x q((x-u)/(1-u)) rho(u)/(1-u) du``.

A density ``rho`` has Bernoulli(1/2) convolution density ``q`` exactly when
``H rho(x) + H rho(1-x) = 2``; :func:`check_characterization` tests that
identity on a grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import GridFunction

DEFAULT_NODES = (1 << 12) + 1
GAUSS_POINTS = 12
END_LEVELS = 40
DIVERGENCE_RATIO = 1e-3


class NonMemberError(ArithmeticError):
    """The defining integral of ``H rho`` diverges at some node."""


@dataclass(frozen=True, eq=False)
class ConvolutionDensity:
    """A bounded, symmetric, normalised density ``q`` on [0, 1]."""

    q: GridFunction
    constant: bool = False

    def __post_init__(self):
        q = self.q
        if q.lo != 0.0 or q.hi != 1.0:
            raise ValueError("q must live on [0, 1]")
        v = q.values
        if np.any(v[1:-1] <= 0):
            raise ValueError("q must be positive at interior nodes")
        if np.max(np.abs(v - v[::-1])) > 1e-10:
            raise ValueError("q must satisfy q(x) = q(1-x)")
        if abs(q.integral() - 1.0) > 1e-10:
            raise ValueError(f"q must integrate to 1, got {q.integral()!r}")
        object.__setattr__(self, "constant", bool(np.all(v == v[0])))

    @classmethod
    def uniform(cls, n_nodes: int = DEFAULT_NODES) -> "ConvolutionDensity":
        return cls(GridFunction(np.ones(n_nodes)))

    @classmethod
    def beta(cls, a: float, n_nodes: int = DEFAULT_NODES) -> "ConvolutionDensity":
        """Symmetric Beta(a, a) density, ``a >= 1`` so that it stays bounded."""
        from scipy.special import beta as beta_fn

        if a < 1:
            raise ValueError("Beta(a, a) with a < 1 has an unbounded density")
        x = np.linspace(0.0, 1.0, n_nodes)
        v = x ** (a - 1) * (1 - x) ** (a - 1) / beta_fn(a, a)
        v = 0.5 * (v + v[::-1])
        g = GridFunction(v)
        return cls(g * (1.0 / g.integral()))

    def __call__(self, x):
        return self.q(x)


def _density_callable(rho):
    if isinstance(rho, GridFunction):
        return rho
    pdf = getattr(rho, "pdf", None)
    if pdf is not None:
        return pdf
    if callable(rho):
        return rho
    raise TypeError("rho must be a GridFunction, a density with .pdf, or a callable")


def _default_nodes(rho, q: ConvolutionDensity):
    if isinstance(rho, GridFunction):
        return rho.n_nodes
    grid = getattr(rho, "grid", None)
    if isinstance(grid, GridFunction):
        return grid.n_nodes
    return q.q.n_nodes


def _endpoint_integral(dens, h, t, w):
    """``int_{1-h}^1 dens(u)/(1-u) du`` on panels halving toward 1.

    Returns ``(value, diverges)``; the panel contributions of a convergent
    integrand decay geometrically, those of ``rho(1) > 0`` stay flat.
    """
    total, first, last = 0.0, None, 0.0
    width = h
    left = 1.0 - h
    for _ in range(END_LEVELS):
        if width < 1e-13:
            break
        right = left + 0.5 * width
        u = left + 0.5 * (right - left) * (t + 1.0)
        part = float(np.sum(0.5 * (right - left) * w * dens(u) / (1.0 - u)))
        total += part
        first = part if first is None else first
        last = part
        left, width = right, 0.5 * width
    scale = max(abs(first), abs(total), 1e-300)
    return total, abs(last) > DIVERGENCE_RATIO * scale


def apply_H(rho, q: ConvolutionDensity, n_nodes: int | None = None, require_member: bool = False) -> GridFunction:
    """``[H rho]`` at uniform nodes of [0, 1].

    ``rho`` may be a :class:`GridFunction`, a density with a ``pdf`` method
    or a plain callable.  Each cell is integrated by Gauss-Legendre; the
    endpoint ``x = 1`` uses panels halving toward ``u = 1``.  A divergent
    endpoint integral is returned as ``inf`` unless ``require_member``.
    """
    dens = _density_callable(rho)
    n = _default_nodes(rho, q) if n_nodes is None else n_nodes
    x = np.linspace(0.0, 1.0, n)
    h = 1.0 / (n - 1)
    t, w = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    U = x[:-1, None] + 0.5 * h * (t + 1.0)
    W = 0.5 * h * w * np.asarray(dens(U), dtype=float) / (1.0 - U)
    W = np.ascontiguousarray(W)
    if np.any(W < 0):
        raise ValueError("rho must be nonnegative")

    out = np.zeros(n)
    if q.constant:
        out[1:] = np.cumsum(W.sum(axis=1))
        out[-1] = out[-2]
    else:
        qv = np.ascontiguousarray(q.q.values)
        # cells strictly below the last one, then the last cell [x_{i-1}, x_i]
        out = np.asarray(kernels.h_sums(qv, np.ascontiguousarray(U), W, x), dtype=float)
        i = np.arange(1, n)
        Ul, Wl = U[i - 1], W[i - 1]
        arg = (x[i, None] - Ul) / (1.0 - Ul)
        out[1:] += np.sum(Wl * q(np.clip(arg, 0.0, 1.0)), axis=1)
        out[1:-1] /= q.q.values[1:-1]

    # x = 1 reduces to int rho/(1-u): q((1-u)/(1-u)) / q(1) = 1 when q(1) > 0
    tail, diverges = _endpoint_integral(dens, h, t, w)
    q1 = q.q.values[-1]
    if diverges:
        if require_member:
            raise NonMemberError("int rho(u)/(1-u) du diverges at u = 1")
        out[-1] = np.inf
    elif q1 > 0:
        out[-1] = float(np.sum(W[:-1])) + tail
    else:
        out[-1] = np.nan
    out[0] = 0.0
    return GridFunction(out, allow_nonfinite=True)


@dataclass(frozen=True)
class CharacterizationReport:
    max_dev: float
    argmax_x: float
    passed: bool
    tol: float

    def to_json(self) -> dict:
        return {"max_dev": self.max_dev, "argmax_x": self.argmax_x, "pass": self.passed, "tol": self.tol}


def check_characterization(rho, q: ConvolutionDensity, tol: float = 1e-7, n_nodes: int | None = None) -> CharacterizationReport:
    """Max of ``|H rho(x) + H rho(1-x) - 2|`` over interior nodes."""
    H = apply_H(rho, q, n_nodes)
    v = H.values
    dev = np.abs(v + v[::-1] - 2.0)[1:-1]
    k = int(np.argmax(dev))
    max_dev = float(dev[k])
    return CharacterizationReport(max_dev, float(H.nodes[1 + k]), bool(max_dev <= tol), tol)
