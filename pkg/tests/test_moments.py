import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stickconv.measures import Beta, Dirac, GridDensity, MomentVector, Uniform, moments
from stickconv.moments import (
    HalfNotIdentifiable,
    NearSingularError,
    coefficient_table,
    forward_z_moments,
    hausdorff_check,
    pivot,
    prop22_residual,
    reconstruct,
    stick_b_sequence,
)
from stickconv.partition import ConvolutionSampleConfig, sample_bernoulli_convolution

F = Fraction


def test_forward_gem_gives_beta():
    for theta, p in [(1, F(1, 4)), (3, F(2, 3)), (2, F(1, 2))]:
        z = forward_z_moments(Beta(1, theta), p, 12)
        assert z.values == moments(Beta(p * theta, (1 - p) * theta), 12).values


def test_forward_dirac_half_at_half_is_uniform():
    z = forward_z_moments(Dirac(F(1, 2)), F(1, 2), 10)
    assert z.values == tuple(F(1, n + 1) for n in range(11))


def test_forward_against_brute_force_enumeration():
    a, p, depth = F(3, 4), F(1, 3), 12
    parts = [a * (1 - a) ** i for i in range(depth)]
    ref = [0.0] * 6
    for eps in itertools.product((0, 1), repeat=depth):
        k = sum(eps)
        w = float(p**k * (1 - p) ** (depth - k))
        z = float(sum(e * x for e, x in zip(eps, parts)))
        for n in range(6):
            ref[n] += w * z**n
    z = forward_z_moments(Dirac(a), p, 5)
    for n in range(6):
        assert float(z[n]) == pytest.approx(ref[n], abs=1e-6)


def test_forward_matches_monte_carlo():
    cfg = ConvolutionSampleConfig(F(1, 5), 100_000, 17)
    zs = sample_bernoulli_convolution(Uniform(), cfg)
    z = forward_z_moments(Uniform(), F(1, 5), 4)
    for n in range(1, 5):
        s = zs**n
        assert abs(s.mean() - float(z[n])) < 5 * s.std() / np.sqrt(s.size)


def test_forward_boundary_p():
    assert forward_z_moments(Beta(1, 2), 0, 5).values == (1, 0, 0, 0, 0, 0)
    assert forward_z_moments(Beta(1, 2), 1, 5).values == (1,) * 6


def test_forward_float_and_measure_inputs_agree():
    exact = forward_z_moments(moments(Beta(2, 3), 10), F(1, 3), 10)
    flt = forward_z_moments(Beta(2, 3), F(1, 3), 10, "float")
    assert np.allclose(exact.as_float(), flt.as_float(), rtol=1e-13, atol=0)


def test_forward_grid_density_close_to_exact():
    g = GridDensity.from_pdf(lambda x: 2 * (1 - x), 2049)
    z = forward_z_moments(g, F(1, 2), 10)
    ref = forward_z_moments(Beta(1, 2), F(1, 2), 10)
    assert np.max(np.abs(z.as_float() - ref.as_float())) < 1e-7


def test_forward_rejects_bad_input():
    with pytest.raises(ValueError):
        forward_z_moments(Beta(1, 2), F(3, 2), 4)
    with pytest.raises(ValueError):
        forward_z_moments(moments(Beta(1, 2), 4, "float"), F(1, 2), 4, "rational")


def test_b_sequence_closed_forms():
    b = stick_b_sequence(moments(Beta(1, 3), 20))
    assert b == [F(4 * n, n + 3) for n in range(21)]
    b = stick_b_sequence(moments(Dirac(F(2, 5)), 8))
    assert b == [(1 - F(3, 5) ** n) / F(2, 5) for n in range(9)]


def test_coefficient_table_entries():
    z = forward_z_moments(Beta(1, 3), F(1, 3), 4)
    t = coefficient_table(z, F(1, 3))
    w1 = 1 - z[1]
    assert t.a[2][1] == -F(1, 3) * 2 * w1
    assert t.c[3] == F(2, 3) * z[3]
    assert t.pivot(3) == t.a[3][3] + t.c[3]


@pytest.mark.parametrize("mu", [Beta(1, 1), Beta(1, 3), Dirac(F(2, 5)), Beta(F(1, 2), 2)])
@pytest.mark.parametrize("p", [F(1, 4), F(1, 3), F(2, 3)])
def test_prop22_residual_vanishes(mu, p):
    m = moments(mu, 12)
    z = forward_z_moments(m, p, 12)
    assert all(prop22_residual(m, z, p, n) == 0 for n in range(1, 13))


def test_prop22_residual_detects_mismatch():
    m = moments(Beta(1, 3), 8)
    z = forward_z_moments(moments(Beta(1, 2), 8), F(1, 3), 8)
    assert any(prop22_residual(m, z, F(1, 3), n) != 0 for n in range(2, 9))


@pytest.mark.parametrize(
    "mu, method",
    [(Beta(1, 1), "rational-1"), (Beta(1, 3), "rational-1"), (Dirac(F(2, 5)), "geometric"), (Beta(2, 3), "rational-2")],
)
def test_reconstruct_roundtrip_exact(mu, method):
    m = moments(mu, 15)
    rep = reconstruct(forward_z_moments(m, F(1, 3), 15), F(1, 3))
    assert rep.mu_moments.values == m.values
    assert rep.ey_method == method
    assert rep.hausdorff.ok
    assert rep.b_nondecreasing()


def test_reconstruct_b_table_for_gem3():
    z = moments(Beta(1, 2), 20)  # Z-law of GEM(3) at p = 1/3
    rep = reconstruct(z, F(1, 3), 20)
    assert list(rep.b) == [F(4 * n, n + 3) for n in range(21)]
    assert rep.ey == F(1, 4)


def test_reconstruct_tail_estimate_is_off_for_gem():
    rep = reconstruct(moments(Beta(1, 2), 20), F(1, 3), 20)
    assert rep.ey_tail == F(23, 80)


def test_reconstruct_refuses_half():
    z = forward_z_moments(Beta(1, 3), F(1, 2), 10)
    with pytest.raises(HalfNotIdentifiable, match="identical Bernoulli\\(1/2\\) convolutions"):
        reconstruct(z, F(1, 2))
    with pytest.raises(ValueError):
        reconstruct(z, 0)


def test_reconstruct_float_path_is_close():
    z = forward_z_moments(Beta(1, 3), F(1, 4), 15, "float")
    rep = reconstruct(z, 0.25)
    ref = moments(Beta(1, 3), 15, "float").as_float()
    assert rep.ey_method == "rational-1"
    assert np.max(np.abs(rep.mu_moments.as_float() - ref)) < 1e-7


def test_float_pivot_floor():
    z = forward_z_moments(Beta(2, 2), F(1, 2), 8, "float")
    with pytest.raises(NearSingularError):
        reconstruct(z, 0.5 + 1e-15)


def test_report_serialisation(tmp_path):
    rep = reconstruct(moments(Beta(1, 2), 10), F(1, 3))
    obj = json.loads(rep.dumps())
    assert obj["EY"] == "1/4"
    assert obj["b"][2] == "8/5"
    assert obj["hausdorff_ok"] is True
    path = tmp_path / "b.csv"
    rep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,b_n,pivot_n"
    assert lines[3].startswith("2,1.6,")


def test_pivots_nonzero_off_half():
    for law in [Beta(1, 2), Beta(2, 5), Uniform(), Dirac(F(1, 3)), Beta(F(1, 2), F(1, 2))]:
        z = moments(law, 12)
        for p in [F(1, 10), F(1, 4), F(2, 5), F(3, 5), F(9, 10)]:
            assert all(pivot(z, p, n) != 0 for n in range(2, 13))


def test_pivots_at_half_alternate_for_symmetric_z():
    z = moments(Beta(2, 2), 12)
    piv = [pivot(z, F(1, 2), n) for n in range(2, 13)]
    assert all((v == 0) if n % 2 else (v > 0) for n, v in zip(range(2, 13), piv))


def test_hausdorff_check():
    assert hausdorff_check(moments(Beta(2, 3), 12)).ok
    bad = hausdorff_check(MomentVector((1, F(1, 2), F(2, 3))))
    assert not bad.ok and bad.violation[:2] == (1, 1)
    assert hausdorff_check(MomentVector((1.0, 0.5, 0.5 + 1e-12), "float")).ok


rationals = st.fractions(min_value=F(1, 10), max_value=F(9, 10), max_denominator=12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), rationals)
def test_prop22_holds_for_random_beta_and_p(a, b, p):
    m = moments(Beta(a, b), 8)
    z = forward_z_moments(m, p, 8)
    assert all(prop22_residual(m, z, p, n) == 0 for n in range(1, 9))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), rationals)
def test_backward_recursion_recovers_b(a, b, p):
    if p == F(1, 2):
        return
    m = moments(Beta(a, b), 10)
    rep = reconstruct(forward_z_moments(m, p, 10), p)
    assert list(rep.b) == stick_b_sequence(m)
