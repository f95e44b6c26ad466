from fractions import Fraction

import numpy as np
import pytest

from stickconv import holroyd
from stickconv.holroyd import (
    DIRECTIONS,
    GeometryError,
    build_reference,
    joint_distance,
    marginal,
    marginal_at,
    perturbed,
    polygon_area,
    triangle_margins,
    z_cdf,
    z_distribution,
)

F = Fraction


def test_triangle_area_by_hit_count():
    rng = np.random.default_rng(0)
    pts = rng.random((400_000, 2))
    x1, x2 = pts[:, 0], pts[:, 1]
    inside = (x1 >= x2) & (x2 >= 1 - x1 - x2) & (1 - x1 - x2 >= 0)
    area = inside.mean()
    assert abs(area - 1 / 12) < 5 * np.sqrt(area * (1 - area) / pts.shape[0])
    assert polygon_area(holroyd.TRIANGLE) == F(1, 12)


def test_reference_density_is_twelve():
    f, g, eta = build_reference()
    assert f.pieces[0][0] == 12
    assert f.mass() == 1
    assert eta == 1


def test_default_square_margins():
    assert triangle_margins(holroyd.DEFAULT_CENTER) == (F(1, 3), F(1, 6), F(1, 9))


def test_pattern_values_and_cancellations():
    _, g, _ = build_reference()
    t = g.pattern
    assert t[1][2] == 1 and t[2][1] == -1
    assert all(t[k][k] == 0 for k in range(3))
    assert g.is_antisymmetric()
    assert g.line_sums_vanish()
    assert {v for row in t for v in row} == {-1, 0, 1}


def test_bad_square_and_eta_rejected():
    with pytest.raises(GeometryError, match="within"):
        build_reference(center=(F(9, 20), F(2, 5)), side=F(1, 12))
    with pytest.raises(GeometryError, match="eta"):
        build_reference(eta=12)
    with pytest.raises(GeometryError):
        build_reference(side=0)


def test_perturbed_density_positive_and_normalised():
    f, g, eta = build_reference(eta=F(11))
    ft = perturbed(f, g, eta)
    assert ft.mass() == 1
    cx, cy = holroyd.DEFAULT_CENTER
    h = holroyd.DEFAULT_SIDE / 3
    assert ft.value_at((cx, cy + h)) == 12 + 11 * g.pattern[1][2]


@pytest.mark.parametrize("direction", DIRECTIONS)
def test_marginals_agree_exactly(direction):
    f, g, eta = build_reference()
    ft = perturbed(f, g, eta)
    for k in range(0, 145):
        t = F(k, 144)
        assert marginal_at(f, direction, t) == marginal_at(ft, direction, t)
    assert marginal(f, direction, 145).sup_distance(marginal(ft, direction, 145)) == 0.0


@pytest.mark.parametrize("direction", DIRECTIONS)
def test_perturbation_alone_has_zero_marginals(direction):
    _, g, _ = build_reference()
    gd = g.density()
    for k in range(0, 289):
        assert marginal_at(gd, direction, F(k, 288)) == 0


def test_x1_marginal_integrates_to_one():
    f, _, _ = build_reference()
    m = marginal(f, "X1", 721)
    assert m.integral() == pytest.approx(1.0, abs=1e-12)
    # at x1 = 1/2 the section runs from x2 = 1/4 to x2 = 1/2
    assert marginal_at(f, "X1", F(1, 2)) == 12 * F(1, 4)


def test_marginal_rejects_unknown_direction():
    f, _, _ = build_reference()
    with pytest.raises(ValueError):
        marginal(f, "X3", 11)


@pytest.mark.parametrize("p", [F(3, 10), F(1, 2), F(7, 10)])
def test_z_cdfs_agree(p):
    f, g, eta = build_reference()
    ft = perturbed(f, g, eta)
    assert z_distribution(f, p, 121).sup_distance(z_distribution(ft, p, 121)) == 0.0


def test_z_atoms():
    f, _, _ = build_reference()
    p = F(3, 10)
    assert z_cdf(f, p, 0) == (1 - p) ** 3
    assert z_cdf(f, p, 0, left=True) == 0
    assert 1 - z_cdf(f, p, 1, left=True) == p**3


def test_z_symmetric_at_half():
    f, g, eta = build_reference()
    ft = perturbed(f, g, eta)
    for k in range(0, 61):
        z = F(k, 60)
        assert z_cdf(ft, F(1, 2), z) + z_cdf(ft, F(1, 2), 1 - z, left=True) == 1


def test_z_cdf_against_monte_carlo():
    rng = np.random.default_rng(3)
    pts = rng.random((600_000, 2))
    x1, x2 = pts[:, 0], pts[:, 1]
    keep = (x1 >= x2) & (x2 >= 1 - x1 - x2) & (1 - x1 - x2 >= 0)
    x1, x2 = x1[keep], x2[keep]
    eps = rng.random((x1.size, 3)) < 0.3
    z = eps[:, 0] * x1 + eps[:, 1] * x2 + eps[:, 2] * (1 - x1 - x2)
    f, _, _ = build_reference()
    for t in (0.2, 0.5, 0.8):
        emp = (z <= t).mean()
        assert abs(emp - float(z_cdf(f, F(3, 10), t))) < 5 * np.sqrt(0.25 / z.size)


def test_joint_distance_values():
    f, g, eta = build_reference()
    ft = perturbed(f, g, eta)
    assert joint_distance(f, f) == 0.0
    d1 = joint_distance(f, ft)
    assert d1 == pytest.approx(2 * float(g.side) ** 2 / 3, rel=1e-12)
    d2 = joint_distance(f, perturbed(f, g, 2))
    assert d2 == pytest.approx(2 * d1, rel=1e-12)


def test_density_csv(tmp_path):
    f, _, _ = build_reference()
    path = tmp_path / "f.csv"
    f.to_csv(path, n=5)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,value"
    assert len(lines) == 26


def test_full_counterexample_report():
    rep = holroyd.verify_counterexample(resolution=73)
    assert rep.passed
    assert rep.to_json()["pass"] is True
