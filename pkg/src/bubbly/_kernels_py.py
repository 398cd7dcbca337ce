"""Pure-Python implementations of the hot loops.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
extension is unavailable or ``BUBBLY_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np


def samuelson_orbit(x1, x2, a, b, beta, q, steps):
    out = np.empty((steps + 1, 2))
    out[0, 0] = x1
    out[0, 1] = x2
    ba = beta * a
    bp1 = 1.0 + beta
    for t in range(steps):
        x1 = b * x1 / (ba - bp1 * x1) - q * x2
        x2 = q * x2
        out[t + 1, 0] = x1
        out[t + 1, 1] = x2
    return out


def samuelson_escape(x1, x2, a, b, beta, q, s1, s2, w1, w2, band, lo, hi, steps):
    """Signed escape value of the orbit started at (x1, x2).

    Returns +/-inf as soon as the orbit leaves the band around (s1, s2)
    measured along (w1, w2), or leaves (lo, hi) in the first coordinate;
    otherwise the projected deviation after ``steps`` iterations.
    """
    ba = beta * a
    bp1 = 1.0 + beta
    dev = w1 * (x1 - s1) + w2 * (x2 - s2)
    for _ in range(steps):
        x1 = b * x1 / (ba - bp1 * x1) - q * x2
        x2 = q * x2
        if x1 != x1:
            return math.nan
        if x1 >= hi:
            return math.inf
        if x1 <= lo:
            return -math.inf
        dev = w1 * (x1 - s1) + w2 * (x2 - s2)
        if dev > band:
            return math.inf
        if dev < -band:
            return -math.inf
    return dev


def samuelson_scan(x1s, x2, a, b, beta, q, s1, s2, w1, w2, band, lo, hi, steps):
    x1s = np.asarray(x1s, dtype=float)
    out = np.empty(x1s.shape[0])
    for i in range(x1s.shape[0]):
        out[i] = samuelson_escape(x1s[i], x2, a, b, beta, q, s1, s2, w1, w2,
                                  band, lo, hi, steps)
    return out


def price_recursion(P0, a, b, beta, G, G_d, D0, T):
    """Forward iteration of the price difference equation in levels.

    P[t+1] = b G^{t+1} P[t] / (beta a G^t - (1+beta) P[t]) - D0 G_d^{t+1}
    """
    P = np.empty(T + 1)
    P[0] = P0
    Gt = 1.0
    Dt = D0
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


def leverage_orbit_cd(x1, x2, A, alpha, delta, c, G, steps):
    """Orbit of the dividend-injected leverage map with f(y) = A y^alpha."""
    out = np.empty((steps + 1, 2))
    out[0, 0] = x1
    out[0, 1] = x2
    k = c / G
    for t in range(steps):
        fp = A * alpha * x1 ** (alpha - 1.0)
        x1 = k * x1 * (fp + 1.0 - delta) + x2
        x2 = x2 / G
        out[t + 1, 0] = x1
        out[t + 1, 1] = x2
    return out
