# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: orbit iteration and shooting scans.

Same signatures and semantics as ``_kernels_py``.
"""
import numpy as np
from libc.math cimport INFINITY, NAN, pow

cimport numpy as cnp

cnp.import_array()


def samuelson_orbit(double x1, double x2, double a, double b, double beta,
                    double q, Py_ssize_t steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((steps + 1, 2))
    cdef double ba = beta * a, bp1 = 1.0 + beta
    cdef Py_ssize_t t
    out[0, 0] = x1
    out[0, 1] = x2
    for t in range(steps):
        x1 = b * x1 / (ba - bp1 * x1) - q * x2
        x2 = q * x2
        out[t + 1, 0] = x1
        out[t + 1, 1] = x2
    return out


cdef inline double _escape(double x1, double x2, double a, double b, double beta,
                           double q, double s1, double s2, double w1, double w2,
                           double band, double lo, double hi,
                           Py_ssize_t steps) noexcept nogil:
    cdef double ba = beta * a, bp1 = 1.0 + beta
    cdef double dev = w1 * (x1 - s1) + w2 * (x2 - s2)
    cdef Py_ssize_t t
    for t in range(steps):
        x1 = b * x1 / (ba - bp1 * x1) - q * x2
        x2 = q * x2
        if x1 != x1:
            return NAN
        if x1 >= hi:
            return INFINITY
        if x1 <= lo:
            return -INFINITY
        dev = w1 * (x1 - s1) + w2 * (x2 - s2)
        if dev > band:
            return INFINITY
        if dev < -band:
            return -INFINITY
    return dev


def samuelson_escape(double x1, double x2, double a, double b, double beta,
                     double q, double s1, double s2, double w1, double w2,
                     double band, double lo, double hi, Py_ssize_t steps):
    return _escape(x1, x2, a, b, beta, q, s1, s2, w1, w2, band, lo, hi, steps)


def samuelson_scan(x1s, double x2, double a, double b, double beta, double q,
                   double s1, double s2, double w1, double w2, double band,
                   double lo, double hi, Py_ssize_t steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(x1s, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] xv = xs
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _escape(xv[i], x2, a, b, beta, q, s1, s2, w1, w2,
                            band, lo, hi, steps)
    return out


def price_recursion(double P0, double a, double b, double beta, double G,
                    double G_d, double D0, Py_ssize_t T):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] P = np.empty(T + 1)
    cdef double Gt = 1.0, Gn, Dt = D0, Pt
    cdef Py_ssize_t t
    P[0] = P0
    for t in range(T):
        Gn = Gt * G
        Dt = Dt * G_d
        Pt = P[t]
        if Pt == 0.0 and D0 == 0.0:
            P[t + 1] = 0.0
        else:
            P[t + 1] = b * Gn * Pt / (beta * a * Gt - (1.0 + beta) * Pt) - Dt
        Gt = Gn
    return P


def leverage_orbit_cd(double x1, double x2, double A, double alpha,
                      double delta, double c, double G, Py_ssize_t steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((steps + 1, 2))
    cdef double k = c / G, fp
    cdef Py_ssize_t t
    out[0, 0] = x1
    out[0, 1] = x2
    for t in range(steps):
        fp = A * alpha * pow(x1, alpha - 1.0)
        x1 = k * x1 * (fp + 1.0 - delta) + x2
        x2 = x2 / G
        out[t + 1, 0] = x1
        out[t + 1, 1] = x2
    return out
