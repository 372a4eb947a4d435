# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled accumulation of elementary scores over a threshold grid.

Both entry points return ``(sums, sumsq)`` of shape ``(m, 3)`` holding the
per-threshold sums and sums of squares over observations of the three
elementary scores (or of their paired differences).
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _prep(double a, double b, double w, double x1, double x2, double y,
                       double* c1, double* c2, double* q1, double* q2) noexcept nogil:
    cdef double i1 = 1.0 if y <= x1 else 0.0
    cdef double i2 = 1.0 if y <= x2 else 0.0
    c1[0] = i1 - a
    c2[0] = i2 - b
    q1[0] = (i1 - a) * (x1 - y) / w
    q2[0] = (i2 - b) * (x2 - y) / w


cdef inline void _elem(double v, double x1, double x2, double x3, double y,
                       double c1, double c2, double q1, double q2,
                       double* l1, double* l2, double* l3) noexcept nogil:
    cdef double jy = 1.0 if v <= y else 0.0
    cdef double i3 = 1.0 if v <= x3 else 0.0
    l1[0] = c1 * ((1.0 if v <= x1 else 0.0) - jy)
    l2[0] = c2 * ((1.0 if v <= x2 else 0.0) - jy)
    l3[0] = (q2 if i3 > 0.0 else q1) + (i3 - jy) * (v - y)


def murphy_sums(double alpha, double beta,
                const double[::1] x1, const double[::1] x2, const double[::1] x3,
                const double[::1] y, const double[::1] grid):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = grid.shape[0]
    cdef double w = beta - alpha
    sums_arr = np.zeros((m, 3))
    sq_arr = np.zeros((m, 3))
    cdef double[:, ::1] sums = sums_arr
    cdef double[:, ::1] sq = sq_arr
    cdef double[::1] c1 = np.empty(n)
    cdef double[::1] c2 = np.empty(n)
    cdef double[::1] q1 = np.empty(n)
    cdef double[::1] q2 = np.empty(n)
    cdef Py_ssize_t i, j
    cdef double v, l1, l2, l3, s1, s2, s3, t1, t2, t3
    with nogil:
        for i in range(n):
            _prep(alpha, beta, w, x1[i], x2[i], y[i], &c1[i], &c2[i], &q1[i], &q2[i])
        for j in range(m):
            v = grid[j]
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            t1 = 0.0
            t2 = 0.0
            t3 = 0.0
            for i in range(n):
                _elem(v, x1[i], x2[i], x3[i], y[i], c1[i], c2[i], q1[i], q2[i],
                      &l1, &l2, &l3)
                s1 += l1
                s2 += l2
                s3 += l3
                t1 += l1 * l1
                t2 += l2 * l2
                t3 += l3 * l3
            sums[j, 0] = s1
            sums[j, 1] = s2
            sums[j, 2] = s3
            sq[j, 0] = t1
            sq[j, 1] = t2
            sq[j, 2] = t3
    return sums_arr, sq_arr


def murphy_diff_sums(double alpha, double beta,
                     const double[::1] f1, const double[::1] f2, const double[::1] f3,
                     const double[::1] g1, const double[::1] g2, const double[::1] g3,
                     const double[::1] y, const double[::1] grid):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = grid.shape[0]
    cdef double w = beta - alpha
    sums_arr = np.zeros((m, 3))
    sq_arr = np.zeros((m, 3))
    cdef double[:, ::1] sums = sums_arr
    cdef double[:, ::1] sq = sq_arr
    cdef double[::1] fc1 = np.empty(n)
    cdef double[::1] fc2 = np.empty(n)
    cdef double[::1] fq1 = np.empty(n)
    cdef double[::1] fq2 = np.empty(n)
    cdef double[::1] gc1 = np.empty(n)
    cdef double[::1] gc2 = np.empty(n)
    cdef double[::1] gq1 = np.empty(n)
    cdef double[::1] gq2 = np.empty(n)
    cdef Py_ssize_t i, j
    cdef double v, a1, a2, a3, b1, b2, b3, d1, d2, d3
    cdef double s1, s2, s3, t1, t2, t3
    with nogil:
        for i in range(n):
            _prep(alpha, beta, w, f1[i], f2[i], y[i], &fc1[i], &fc2[i], &fq1[i], &fq2[i])
            _prep(alpha, beta, w, g1[i], g2[i], y[i], &gc1[i], &gc2[i], &gq1[i], &gq2[i])
        for j in range(m):
            v = grid[j]
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            t1 = 0.0
            t2 = 0.0
            t3 = 0.0
            for i in range(n):
                _elem(v, f1[i], f2[i], f3[i], y[i], fc1[i], fc2[i], fq1[i], fq2[i],
                      &a1, &a2, &a3)
                _elem(v, g1[i], g2[i], g3[i], y[i], gc1[i], gc2[i], gq1[i], gq2[i],
                      &b1, &b2, &b3)
                d1 = a1 - b1
                d2 = a2 - b2
                d3 = a3 - b3
                s1 += d1
                s2 += d2
                s3 += d3
                t1 += d1 * d1
                t2 += d2 * d2
                t3 += d3 * d3
            sums[j, 0] = s1
            sums[j, 1] = s2
            sums[j, 2] = s3
            sq[j, 0] = t1
            sq[j, 1] = t2
            sq[j, 2] = t3
    return sums_arr, sq_arr
