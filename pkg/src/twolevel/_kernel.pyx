# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled exponential-midpoint kernels.

An SU(2) element is carried as the pair (a, b) with U = [[a, -b*], [b, a*]].
"""

import numpy as np

from libc.math cimport cos, sin, sqrt


cdef inline void _midpoint_step(const double[::1] offset, const long long[::1] axes,
                                const double[::1] amps, const double[::1] freqs,
                                const double[::1] phases, double t, double h,
                                double complex *sa, double complex *sb) noexcept nogil:
    cdef double B[3]
    cdef Py_ssize_t k
    cdef double ax, ay, az, n, c, s
    B[0] = offset[0]
    B[1] = offset[1]
    B[2] = offset[2]
    for k in range(axes.shape[0]):
        B[axes[k]] += amps[k] * cos(freqs[k] * t + phases[k])
    ax = -0.5 * B[0]
    ay = -0.5 * B[1]
    az = -0.5 * B[2]
    n = sqrt(ax * ax + ay * ay + az * az)
    c = cos(n * h)
    if n > 0.0:
        s = sin(n * h) / n
    else:
        s = h
    sa[0] = c - 1j * s * az
    sb[0] = s * ay - 1j * s * ax


cdef inline void _compose(double complex *a, double complex *b,
                          double complex sa, double complex sb) noexcept nogil:
    # (a, b) <- S . (a, b)
    cdef double complex na = sa * a[0] - sb.conjugate() * b[0]
    cdef double complex nb = sb * a[0] + sa.conjugate() * b[0]
    a[0] = na
    b[0] = nb


def step_product(const double[::1] offset, const long long[::1] axes,
                 const double[::1] amps, const double[::1] freqs,
                 const double[::1] phases, double t0, double h, Py_ssize_t n):
    """Ordered product U_n ... U_1 of midpoint steps starting at ``t0``."""
    cdef double complex a = 1.0, b = 0.0, sa, sb
    cdef Py_ssize_t j
    with nogil:
        for j in range(n):
            _midpoint_step(offset, axes, amps, freqs, phases, t0 + (j + 0.5) * h, h, &sa, &sb)
            _compose(&a, &b, sa, sb)
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def interval_products(const double[::1] offset, const long long[::1] axes,
                      const double[::1] amps, const double[::1] freqs,
                      const double[::1] phases, double t0, double h,
                      Py_ssize_t substeps, Py_ssize_t n_intervals, bint cumulative):
    """Propagators over ``n_intervals`` consecutive intervals of ``substeps`` steps.

    With ``cumulative`` the i-th entry maps t0 to the end of interval i;
    otherwise it maps the start of interval i to its end.
    """
    out = np.empty((n_intervals, 2, 2), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    cdef double complex a = 1.0, b = 0.0, sa, sb
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n_intervals):
            if not cumulative:
                a = 1.0
                b = 0.0
            for j in range(substeps):
                _midpoint_step(offset, axes, amps, freqs, phases,
                               t0 + (i * substeps + j + 0.5) * h, h, &sa, &sb)
                _compose(&a, &b, sa, sb)
            o[i, 0, 0] = a
            o[i, 0, 1] = -b.conjugate()
            o[i, 1, 0] = b
            o[i, 1, 1] = a.conjugate()
    return out
