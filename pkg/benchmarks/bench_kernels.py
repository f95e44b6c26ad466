"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with best-of-N wall time for each backend and
the max absolute difference between their outputs.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from stickconv import kernels
from stickconv.fractional import _product_weights


def _stick_case(rng):
    n, block = 20_000, 48
    Y = rng.beta(1.0, 3.0, (n, block))
    U = rng.random((n, block))
    rows = np.arange(n, dtype=np.int64)

    def run(mod):
        z, rem, count = np.zeros(n), np.ones(n), np.zeros(n, dtype=np.int64)
        mod.stick_accumulate(Y, U, 0.3, 1e-12, z, rem, count, rows)
        return z

    return run


def _h_case(rng):
    n, g = 1025, 12
    x = np.linspace(0.0, 1.0, n)
    t, w = np.polynomial.legendre.leggauss(g)
    h = 1.0 / (n - 1)
    U = np.ascontiguousarray(x[:-1, None] + 0.5 * h * (t + 1.0))
    W = np.ascontiguousarray(0.5 * h * w * 2.0 * (1.0 - U) / (1.0 - U))
    q = 6.0 * x * (1.0 - x) + 0.1

    def run(mod):
        return np.asarray(mod.h_sums(q, U, W, x))

    return run


def _rl_case(rng):
    n = 1 << 14
    a = 0.5
    k = np.arange(n, dtype=float)
    c = _product_weights(n, a + 1.0)
    b0 = np.zeros(n)
    b0[1:] = (k[1:] - 1.0) ** (a + 1.0) - (k[1:] - 1.0 - a) * k[1:] ** a
    f = np.ascontiguousarray(np.linspace(0.0, 1.0, n) ** 2)

    def run(mod):
        return np.asarray(mod.rl_convolve(f, c, b0))

    return run


CASES = {"stick_accumulate": _stick_case, "h_sums": _h_case, "rl_convolve": _rl_case}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = sorted(kernels.BACKENDS)
    if "cython" not in backends:
        print("compiled kernels are not built; timing the numpy fallback only")
    print(f"{'kernel':<18}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}{'max |diff|':>14}")
    for name, make in CASES.items():
        run = make(np.random.default_rng(0))
        times, outs = {}, {}
        for b in backends:
            mod = kernels.get_backend(b)
            outs[b] = run(mod)
            times[b] = min(timeit.repeat(lambda: run(mod), number=1, repeat=args.repeat))
        line = f"{name:<18}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends)
        if len(backends) == 2:
            diff = float(np.max(np.abs(outs["cython"] - outs["python"])))
            line += f"{times['python'] / times['cython']:>9.1f}x{diff:>14.2e}"
        print(line)


if __name__ == "__main__":
    main()
