# cython: language_level=3
"""Compiled inner loops.

``stick_accumulate`` repeats the numpy arithmetic step for step, so both
backends give bit-identical samples.  ``rl_convolve`` uses compensated
summation where the fallback uses long double; they agree to rounding.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs
from libc.stdint cimport int64_t

cnp.import_array()


def stick_accumulate(const double[:, ::1] Y, const double[:, ::1] U, double p,
                     double tol, double[::1] z, double[::1] rem,
                     int64_t[::1] count, const int64_t[::1] rows):
    cdef Py_ssize_t nrows = Y.shape[0], ncols = Y.shape[1]
    cdef Py_ssize_t r, k, i
    cdef double x, r_i
    out = np.zeros(nrows, dtype=np.bool_)
    cdef cnp.npy_bool[::1] still = out
    with nogil:
        for r in range(nrows):
            i = rows[r]
            r_i = rem[i]
            for k in range(ncols):
                if r_i < tol:
                    break
                x = r_i * Y[r, k]
                if U[r, k] < p:
                    z[i] = z[i] + x
                r_i = r_i * (1.0 - Y[r, k])
                count[i] += 1
            rem[i] = r_i
            still[r] = r_i >= tol
    return out


cdef inline double _interp(const double[::1] q, double t) nogil:
    cdef Py_ssize_t m = q.shape[0] - 1
    cdef double s = t * m
    cdef Py_ssize_t j
    if s <= 0.0:
        return q[0]
    if s >= m:
        return q[m]
    j = <Py_ssize_t>s
    if j >= m:
        j = m - 1
    s -= j
    return q[j] + s * (q[j + 1] - q[j])


def h_sums(const double[::1] q, const double[:, ::1] U, const double[:, ::1] W,
           const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], G = U.shape[1]
    cdef Py_ssize_t i, j, g, last
    cdef double s, xi, u
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xi = x[i]
            last = i - 1
            if last > U.shape[0]:
                last = U.shape[0]
            s = 0.0
            for j in range(last):
                for g in range(G):
                    u = U[j, g]
                    s += W[j, g] * _interp(q, (xi - u) / (1.0 - u))
            o[i] = s
    return out


def rl_convolve(const double[::1] f, const double[::1] c, const double[::1] b0):
    # Neumaier-compensated sums: the outputs feed numerical derivatives
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i, m
    cdef double s, comp, t, term
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            s = b0[i] * f[0]
            comp = 0.0
            for m in range(i):
                term = c[m] * f[i - m]
                t = s + term
                if fabs(s) >= fabs(term):
                    comp += (s - t) + term
                else:
                    comp += (term - t) + s
                s = t
            o[i] = s + comp
    return out
