"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""
from __future__ import annotations

import numpy as np


def stick_accumulate(Y, U, p, tol, z, rem, count, rows):
    """Break sticks for ``rows`` using one block of draws, in place.

    Row ``r`` of ``Y``/``U`` belongs to sample ``rows[r]``.  A sample stops
    consuming draws once its unallocated mass drops below ``tol``.
    Returns a mask of rows that still need more sticks.
    """
    r_i = rem[rows].copy()
    z_i = z[rows].copy()
    c_i = count[rows].copy()
    for k in range(Y.shape[1]):
        live = r_i >= tol
        if not live.any():
            break
        y = Y[live, k]
        x = r_i[live] * y
        z_i[live] = np.where(U[live, k] < p, z_i[live] + x, z_i[live])
        r_i[live] = r_i[live] * (1.0 - y)
        c_i[live] += 1
    z[rows] = z_i
    rem[rows] = r_i
    count[rows] = c_i
    return r_i >= tol


def _interp(q, t):
    m = q.size - 1
    s = np.clip(t * m, 0.0, float(m))
    j = np.minimum(s.astype(np.int64), m - 1)
    s = s - j
    return q[j] + s * (q[j + 1] - q[j])


def h_sums(q, U, W, x):
    """``out[i] = sum_{j < i-1, g} W[j,g] q((x_i - U[j,g]) / (1 - U[j,g]))``."""
    out = np.zeros(x.size)
    for i in range(2, x.size):
        u = U[: i - 1]
        out[i] = np.sum(W[: i - 1] * _interp(q, (x[i] - u) / (1.0 - u)))
    return out


def rl_convolve(f, c, b0):
    """``out[i] = b0[i] f[0] + sum_{m<i} c[m] f[i-m]``, accumulated in extended precision."""
    g = np.array(f, dtype=np.longdouble)
    f0 = g[0]
    g[0] = 0.0
    acc = np.convolve(np.asarray(c, dtype=np.longdouble), g)[: g.size]
    return (np.asarray(b0, dtype=np.longdouble) * f0 + acc).astype(float)
