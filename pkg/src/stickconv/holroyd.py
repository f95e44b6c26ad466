"""Two laws of a three-part partition with the same Bernoulli(p) convolutions.

The partition is ``(x1, x2, 1 - x1 - x2)`` on the triangle
``x1 >= x2 >= 1 - x1 - x2 >= 0``.  ``Z`` only ever sees ``x1``, ``x2`` or
``x1 + x2``, so adding a perturbation whose integrals along vertical,
horizontal and slope -1 lines all vanish changes the joint law but no
Bernoulli(p) convolution.

Densities are piecewise constant on convex polygons with rational
vertices, so marginals and CDFs are computed exactly in rationals.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from ._exact import to_fraction
from .grid import GridFunction, write_columns

TRIANGLE = ((Fraction(1, 3), Fraction(1, 3)), (Fraction(1), Fraction(0)), (Fraction(1, 2), Fraction(1, 2)))
STEP_PHI = (1, -1, 0)
STEP_PSI = (0, 1, -1)
DEFAULT_CENTER = (Fraction(11, 18), Fraction(5, 18))
DEFAULT_SIDE = Fraction(1, 12)
DIRECTIONS = ("X1", "X2", "X1+X2")


class GeometryError(ValueError):
    pass


# --------------------------------------------------------------------------
# exact polygon helpers


def polygon_area(poly) -> Fraction:
    n = len(poly)
    if n < 3:
        return Fraction(0)
    s = sum(poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1] for i in range(n))
    return abs(s) / 2


def clip_halfplane(poly, a, b, c):
    """Part of a convex polygon where ``a x + b y <= c``."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _linear(direction):
    # (coefficients of the level functional, index of the coordinate measured along the line)
    return {"X1": ((1, 0), 1), "X2": ((0, 1), 0), "X1+X2": ((1, 1), 0)}[direction]


def section_length(poly, direction, t) -> Fraction:
    """Length of ``poly`` cut by the level line ``l(x) = t``.

    Measured in the coordinate that parametrises the line (``x2`` for
    vertical lines, ``x1`` otherwise), which is the marginal-density weight.
    """
    (a, b), k = _linear(direction)
    pts = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - t
        fq = a * q[0] + b * q[1] - t
        if fp == 0:
            pts.append(p[k])
        if (fp < 0 < fq) or (fq < 0 < fp):
            s = fp / (fp - fq)
            pts.append(p[k] + s * (q[k] - p[k]))
    if len(pts) < 2:
        return Fraction(0)
    return max(pts) - min(pts)


def _inside(poly, x1, x2):
    """Vectorised point-in-convex-polygon test (closed set)."""
    n = len(poly)
    area2 = sum(poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1] for i in range(n))
    sign = 1.0 if area2 > 0 else -1.0
    ok = np.ones(np.broadcast(x1, x2).shape, dtype=bool)
    for i in range(n):
        (px, py), (qx, qy) = poly[i], poly[(i + 1) % n]
        cross = (float(qx) - float(px)) * (x2 - float(py)) - (float(qy) - float(py)) * (x1 - float(px))
        ok &= sign * cross >= -1e-15
    return ok


# --------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class SimplexDensity:
    """Sum of ``weight * indicator(polygon)`` over convex rational polygons."""

    pieces: tuple

    def mass(self) -> Fraction:
        return sum((w * polygon_area(P) for w, P in self.pieces), Fraction(0))

    def pdf(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        for w, P in self.pieces:
            out += float(w) * _inside(P, x1, x2)
        return out

    def value_at(self, pt) -> Fraction:
        """Exact density at an interior point of a piece."""
        total = Fraction(0)
        for w, P in self.pieces:
            if all(
                (P[(i + 1) % len(P)][0] - P[i][0]) * (pt[1] - P[i][1])
                - (P[(i + 1) % len(P)][1] - P[i][1]) * (pt[0] - P[i][0])
                >= 0
                for i in range(len(P))
            ):
                total += w
        return total

    def plus(self, other: "SimplexDensity", scale=1) -> "SimplexDensity":
        scale = to_fraction(scale)
        return SimplexDensity(self.pieces + tuple((scale * w, P) for w, P in other.pieces))

    def to_grid(self, n: int = 257):
        """Node values on an ``n x n`` grid of [0, 1]^2 as (x1, x2, value) columns."""
        t = np.linspace(0.0, 1.0, n)
        X1, X2 = np.meshgrid(t, t, indexing="ij")
        return X1.ravel(), X2.ravel(), self.pdf(X1, X2).ravel()

    def to_csv(self, path, n: int = 257) -> None:
        write_columns(path, ("x1", "x2", "value"), list(self.to_grid(n)))


def _centroid(P):
    return (sum(p[0] for p in P) / len(P), sum(p[1] for p in P) / len(P))


def uniform_on_triangle() -> SimplexDensity:
    area = polygon_area(TRIANGLE)
    return SimplexDensity(((1 / area, TRIANGLE),))


def triangle_margins(pt):
    """The three linear forms that are nonnegative exactly on the triangle."""
    x1, x2 = pt
    return (x1 - x2, x1 + 2 * x2 - 1, 1 - x1 - x2)


@dataclass(frozen=True)
class PerturbationPattern:
    """Signs ``pattern[i][j]`` on a 3 x 3 split of a square inside the triangle.

    ``i`` indexes thirds along ``x1``, ``j`` along ``x2``.
    """

    center: tuple
    side: Fraction
    pattern: tuple
    eta: Fraction

    def cells(self):
        cx, cy = self.center
        h = self.side / 3
        x0, y0 = cx - self.side / 2, cy - self.side / 2
        for i, j in product(range(3), repeat=2):
            a, b = x0 + i * h, y0 + j * h
            yield i, j, ((a, b), (a + h, b), (a + h, b + h), (a, b + h))

    def corners(self):
        cx, cy = self.center
        r = self.side / 2
        return [(cx + sx * r, cy + sy * r) for sx, sy in product((-1, 1), repeat=2)]

    def density(self) -> SimplexDensity:
        """``g`` itself (unit amplitude)."""
        return SimplexDensity(tuple((Fraction(self.pattern[i][j]), P) for i, j, P in self.cells() if self.pattern[i][j]))

    def is_antisymmetric(self) -> bool:
        g = self.pattern
        return all(g[i][j] == -g[j][i] for i in range(3) for j in range(3))

    def line_sums_vanish(self) -> bool:
        g = self.pattern
        rows = all(sum(g[i]) == 0 for i in range(3))
        cols = all(sum(g[i][j] for i in range(3)) == 0 for j in range(3))
        diags = all(sum(g[i][s - i] for i in range(3) if 0 <= s - i < 3) == 0 for s in range(5))
        return rows and cols and diags


def step_pattern():
    """``g(i,j) = phi(i) psi(j) - psi(i) phi(j)`` for the two zero-mean steps."""
    return tuple(tuple(STEP_PHI[i] * STEP_PSI[j] - STEP_PSI[i] * STEP_PHI[j] for j in range(3)) for i in range(3))


def build_reference(center=DEFAULT_CENTER, side=DEFAULT_SIDE, eta=1):
    """``(f, g, eta)``: uniform density on the triangle and the step pattern.

    The square must keep every triangle margin at least ``side / 10`` at all
    four corners, and ``0 < eta < 12`` keeps ``f + eta g`` strictly positive.
    """
    center = (to_fraction(center[0]), to_fraction(center[1]))
    side, eta = to_fraction(side), to_fraction(eta)
    if side <= 0:
        raise GeometryError("side must be positive")
    g = PerturbationPattern(center, side, step_pattern(), eta)
    margin = side / 10
    for c in g.corners():
        worst = min(triangle_margins(c))
        if worst < margin:
            raise GeometryError(f"square corner {tuple(map(str, c))} is within {worst} of the triangle edge (need {margin})")
    f = uniform_on_triangle()
    peak = f.pieces[0][0]
    if not 0 < eta < peak:
        raise GeometryError(f"eta must lie in (0, {peak}) to keep f + eta g positive, got {eta}")
    return f, g, eta


def perturbed(f: SimplexDensity, g: PerturbationPattern, eta=None) -> SimplexDensity:
    eta = g.eta if eta is None else to_fraction(eta)
    out = f.plus(g.density(), eta)
    for w, P in out.pieces:
        if out.value_at(_centroid(P)) <= 0:
            raise GeometryError("perturbed density is not positive")
    return out


# --------------------------------------------------------------------------
# marginals, Z law and distance


def _nodes(resolution: int):
    return [Fraction(i, resolution - 1) for i in range(resolution)]


def marginal(density: SimplexDensity, direction: str, resolution: int = 721) -> GridFunction:
    """Density of ``X1``, ``X2`` or ``X1 + X2`` at uniform nodes.

    ``X1 + X2`` lives on [0, 1] here too: it is supported on [2/3, 1].
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    vals = [float(marginal_at(density, direction, t)) for t in _nodes(resolution)]
    return GridFunction(np.array(vals))


def marginal_at(density: SimplexDensity, direction: str, t) -> Fraction:
    t = to_fraction(t)
    return sum((w * section_length(P, direction, t) for w, P in density.pieces), Fraction(0))


def _patterns(p: Fraction):
    for eps in product((0, 1), repeat=3):
        k = sum(eps)
        yield eps, p**k * (1 - p) ** (3 - k)


def z_cdf(density: SimplexDensity, p, z, left: bool = False) -> Fraction:
    """``P(Z <= z)`` (or ``P(Z < z)`` with ``left``) in exact arithmetic."""
    p, z = to_fraction(p), to_fraction(z)
    total = Fraction(0)
    for eps, weight in _patterns(p):
        e1, e2, e3 = eps
        a, b, c = e1 - e3, e2 - e3, e3  # Z = a x1 + b x2 + c
        if a == 0 and b == 0:
            hit = c < z if left else c <= z
            total += weight * density.mass() if hit else 0
            continue
        part = Fraction(0)
        for w, P in density.pieces:
            part += w * polygon_area(clip_halfplane(P, a, b, z - c))
        total += weight * part
    return total


def z_distribution(density: SimplexDensity, p, resolution: int = 721) -> GridFunction:
    """CDF of ``Z`` at uniform nodes of [0, 1], summing the eight mark patterns."""
    return GridFunction(np.array([float(z_cdf(density, p, z)) for z in _nodes(resolution)]))


def joint_distance(d1: SimplexDensity, d2: SimplexDensity, cells: int = 720) -> float:
    """L1 distance by the midpoint rule on a ``cells x cells`` grid.

    With ``cells`` a multiple of 72 the grid lines fall on the default
    square's cell boundaries, so piecewise-constant differences there are
    integrated exactly.
    """
    h = 1.0 / cells
    t = (np.arange(cells) + 0.5) * h
    total = 0.0
    for row in np.array_split(np.arange(cells), 8):
        X1, X2 = np.meshgrid(t[row], t, indexing="ij")
        total += float(np.sum(np.abs(d1.pdf(X1, X2) - d2.pdf(X1, X2))))
    return total * h * h


@dataclass(frozen=True)
class CounterexampleReport:
    marginal_gaps: dict
    cdf_gaps: dict
    joint_distance: float
    expected_distance: float

    @property
    def passed(self) -> bool:
        return (
            all(v <= 1e-9 for v in self.marginal_gaps.values())
            and all(v <= 1e-8 for v in self.cdf_gaps.values())
            and self.joint_distance > 0.5 * self.expected_distance
        )

    def to_json(self) -> dict:
        return {
            "marginal_sup_gaps": self.marginal_gaps,
            "z_cdf_sup_gaps": self.cdf_gaps,
            "joint_l1_distance": self.joint_distance,
            "expected_l1_distance": self.expected_distance,
            "pass": self.passed,
        }


def verify_counterexample(ps=("3/10", "1/2", "7/10"), resolution: int = 361, eta=1) -> CounterexampleReport:
    f, g, eta = build_reference(eta=eta)
    ft = perturbed(f, g, eta)
    mg = {d: marginal(f, d, resolution).sup_distance(marginal(ft, d, resolution)) for d in DIRECTIONS}
    cg = {str(p): z_distribution(f, p, resolution).sup_distance(z_distribution(ft, p, resolution)) for p in ps}
    expected = float(2 * eta * g.side**2 / 3)
    return CounterexampleReport(mg, cg, joint_distance(f, ft), expected)
