import numpy as np
import pytest
from scipy import integrate

from stickconv.grid import GridFunction
from stickconv.hoperator import (
    ConvolutionDensity,
    NonMemberError,
    apply_H,
    check_characterization,
)
from stickconv.measures import SymmetricFamilyDensity


def test_gem2_density_maps_to_linear():
    q = ConvolutionDensity.uniform(1025)
    H = apply_H(lambda x: 2 * (1 - x), q)
    x = H.nodes
    assert np.max(np.abs(H.values - 2 * x)) < 1e-12


def test_uniform_rho_gives_log_and_diverges_at_one():
    q = ConvolutionDensity.uniform(513)
    H = apply_H(lambda x: np.ones_like(x), q)
    x = H.nodes[:-1]
    assert np.max(np.abs(H.values[:-1] + np.log1p(-x))) < 1e-12
    assert H.values[-1] == np.inf
    with pytest.raises(NonMemberError):
        apply_H(lambda x: np.ones_like(x), q, require_member=True)


def test_general_q_against_direct_quadrature():
    # oracle uses the exact Beta(2, 2) density, H its grid interpolant: O(h^2) apart
    exact_q = lambda t: 6 * t * (1 - t)  # noqa: E731
    rho = lambda u: 3 * (1 - u) ** 2  # noqa: E731
    gaps = []
    for n in (1025, 4097):
        H = apply_H(rho, ConvolutionDensity.beta(2, n))
        g = 0.0
        for xv in (0.2, 0.5, 0.9):
            num, _ = integrate.quad(lambda u: exact_q((xv - u) / (1 - u)) * rho(u) / (1 - u), 0, xv, epsabs=1e-14)
            g = max(g, abs(H(xv) - num / exact_q(xv)))
        gaps.append(g)
    assert gaps[1] < 1e-7
    assert gaps[0] / gaps[1] > 12


def _symfam(fn, m=1025):
    return SymmetricFamilyDensity(GridFunction.from_function(fn, m, 0.0, 0.5))


@pytest.mark.parametrize("fn", [lambda x: x, lambda x: np.ones_like(x), lambda x: 1 + np.sin(6 * x) ** 2])
def test_symmetric_family_passes_characterisation(fn):
    rep = check_characterization(_symfam(fn), ConvolutionDensity.uniform(2049))
    assert rep.passed
    assert rep.max_dev < 1e-12


def test_violating_density_fails():
    rep = check_characterization(lambda x: 3 * (1 - x) ** 2, ConvolutionDensity.uniform(1025))
    assert not rep.passed
    assert rep.max_dev > 0.1
    obj = rep.to_json()
    assert set(obj) == {"max_dev", "argmax_x", "pass", "tol"}


def test_gem4_with_beta22_convolution():
    q = ConvolutionDensity.beta(2, 4097)
    rep = check_characterization(lambda x: 4 * (1 - x) ** 3, q, tol=1e-4)
    assert rep.passed


def test_q_validation():
    with pytest.raises(ValueError, match="symmetric|q\\(x\\)"):
        ConvolutionDensity(GridFunction(np.linspace(0.5, 1.5, 11)))
    with pytest.raises(ValueError, match="integrate"):
        ConvolutionDensity(GridFunction(np.full(11, 2.0)))
    with pytest.raises(ValueError, match="positive"):
        v = np.ones(11)
        v[5] = 0.0
        ConvolutionDensity(GridFunction(v / GridFunction(v).integral()))
    with pytest.raises(ValueError):
        ConvolutionDensity.beta(0.5)


def test_negative_rho_rejected():
    with pytest.raises(ValueError):
        apply_H(lambda x: x - 0.5, ConvolutionDensity.uniform(33))


def test_beta23_conforms_without_symmetric_construction():
    # x * x(1-x)^2 == (1-x) * (1-x)x^2
    from stickconv.measures import Beta

    rep = check_characterization(Beta(2, 3).pdf, ConvolutionDensity.uniform(2049))
    assert rep.passed
