import numpy as np
import pytest

from stickconv import _pykernels, kernels
from stickconv.fractional import _product_weights

needs_cython = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")


def _stick_inputs(seed=0, n=300, block=48):
    rng = np.random.default_rng(seed)
    Y = rng.beta(1.0, 2.0, (n, block))
    U = rng.random((n, block))
    return Y, U


def _run_stick(mod, Y, U, p=0.3, tol=1e-12):
    n = Y.shape[0]
    z, rem, count = np.zeros(n), np.ones(n), np.zeros(n, dtype=np.int64)
    rows = np.arange(n, dtype=np.int64)
    still = np.asarray(mod.stick_accumulate(Y, U, p, tol, z, rem, count, rows), dtype=bool)
    return z, rem, count, still


def test_python_stick_accumulate_against_loop():
    Y, U = _stick_inputs(n=20, block=6)
    z, rem, count, still = _run_stick(_pykernels, Y, U, tol=1e-3)
    for r in range(20):
        zi, ri, ci = 0.0, 1.0, 0
        for k in range(6):
            if ri < 1e-3:
                break
            if U[r, k] < 0.3:
                zi += ri * Y[r, k]
            ri *= 1 - Y[r, k]
            ci += 1
        assert z[r] == zi and rem[r] == ri and count[r] == ci
        assert still[r] == (ri >= 1e-3)


@needs_cython
def test_stick_accumulate_backends_are_bit_identical():
    Y, U = _stick_inputs()
    a = _run_stick(kernels.get_backend("cython"), Y, U)
    b = _run_stick(kernels.get_backend("python"), Y, U)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def _h_inputs(n=129, g=12):
    x = np.linspace(0.0, 1.0, n)
    t, w = np.polynomial.legendre.leggauss(g)
    h = 1.0 / (n - 1)
    U = np.ascontiguousarray(x[:-1, None] + 0.5 * h * (t + 1.0))
    W = np.ascontiguousarray(0.5 * h * w * 2.0 * np.ones_like(U))
    q = 1.5 - 6.0 * (x - 0.5) ** 2 + 0.0
    return q, U, W, x


def test_python_h_sums_against_loop():
    q, U, W, x = _h_inputs(n=17, g=3)
    out = np.asarray(_pykernels.h_sums(q, U, W, x))
    for i in range(len(x)):
        s = 0.0
        for j in range(max(i - 1, 0)):
            for g in range(U.shape[1]):
                s += W[j, g] * np.interp((x[i] - U[j, g]) / (1 - U[j, g]), x, q)
        assert out[i] == pytest.approx(s, rel=1e-13, abs=1e-15)


@needs_cython
def test_h_sums_backends_agree():
    args = _h_inputs()
    a = np.asarray(kernels.get_backend("cython").h_sums(*args))
    b = np.asarray(kernels.get_backend("python").h_sums(*args))
    assert np.max(np.abs(a - b)) < 1e-13


def _rl_inputs(n=2049, a=0.5):
    k = np.arange(n, dtype=float)
    c = _product_weights(n, a + 1.0)
    b0 = np.zeros(n)
    b0[1:] = (k[1:] - 1.0) ** (a + 1.0) - (k[1:] - 1.0 - a) * k[1:] ** a
    f = np.ascontiguousarray(np.linspace(0.0, 1.0, n) ** 3)
    return f, c, b0


def test_python_rl_convolve_against_loop():
    f, c, b0 = _rl_inputs(n=40)
    out = np.asarray(_pykernels.rl_convolve(f, c, b0))
    for i in range(40):
        ref = b0[i] * f[0] + sum(c[m] * f[i - m] for m in range(i))
        assert out[i] == pytest.approx(ref, rel=1e-13, abs=1e-14)


@needs_cython
def test_rl_convolve_backends_agree():
    args = _rl_inputs()
    a = np.asarray(kernels.get_backend("cython").rl_convolve(*args))
    b = np.asarray(kernels.get_backend("python").rl_convolve(*args))
    assert np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)) < 1e-14


def test_unknown_backend():
    with pytest.raises(ValueError, match="not available"):
        kernels.get_backend("fortran")
