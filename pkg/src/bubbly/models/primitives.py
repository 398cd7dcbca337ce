"""Production technologies and two-period utility plug-ins.

Production objects expose f, f', f'' and the derived wage
omega(k) = f(k) - k f'(k).  Utility objects expose the marginal rate of
substitution M = U1/U2 and its partials M1, M2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from bubbly.errors import InvalidParameters, NoRoot


class Production:
    """Base class; subclasses implement f, fp, fpp."""

    name = "custom"

    def f(self, k):
        raise NotImplementedError

    def fp(self, k):
        raise NotImplementedError

    def fpp(self, k):
        raise NotImplementedError

    def omega(self, k):
        return self.f(k) - k * self.fp(k)

    def omega_prime(self, k):
        return -k * self.fpp(k)

    def elasticity(self, k):
        """Elasticity of substitution between capital and labor at k."""
        f, fp, fpp = self.f(k), self.fp(k), self.fpp(k)
        return -fp * (f - k * fp) / (k * f * fpp)

    def fp_inverse(self, R, lo=1e-12, hi=1e12):
        """k with f'(k) = R (f' strictly decreasing)."""
        g = lambda k: self.fp(k) - R
        a, b = lo, 1.0
        while g(b) > 0 and b < hi:
            b *= 4.0
        while g(a) < 0 and a > 1e-300:
            a /= 4.0
        if not (g(a) > 0 > g(b)):
            raise NoRoot(f"f'(k) = {R} has no root", probed=(a, b))
        return optimize.brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    def check_concavity(self, ks) -> bool:
        ks = np.asarray(ks, dtype=float)
        return bool(np.all(self.fp(ks) > 0) and np.all(self.fpp(ks) < 0))


@dataclass(frozen=True)
class CallableProduction(Production):
    f_: Callable
    fp_: Callable
    fpp_: Callable
    name: str = "custom"

    def f(self, k):
        return self.f_(k)

    def fp(self, k):
        return self.fp_(k)

    def fpp(self, k):
        return self.fpp_(k)


@dataclass(frozen=True)
class CobbDouglas(Production):
    """f(k) = A k^alpha + (1 - delta) k.

    ``delta = 1`` (the default) gives the pure technology A k^alpha.
    """

    A: float = 1.0
    alpha: float = 1.0 / 3.0
    delta: float = 1.0
    name = "cobb_douglas"

    def __post_init__(self):
        if not (self.A > 0 and 0 < self.alpha < 1 and 0 <= self.delta <= 1):
            raise InvalidParameters("Cobb-Douglas needs A > 0, alpha in (0,1), delta in [0,1]")

    def f(self, k):
        return self.A * k ** self.alpha + (1.0 - self.delta) * k

    def fp(self, k):
        return self.A * self.alpha * k ** (self.alpha - 1.0) + 1.0 - self.delta

    def fpp(self, k):
        return self.A * self.alpha * (self.alpha - 1.0) * k ** (self.alpha - 2.0)

    def fp_inverse(self, R, lo=None, hi=None):
        m = R - 1.0 + self.delta
        if m <= 0:
            raise NoRoot(f"f'(k) = {R} unattainable: marginal product must exceed {1 - self.delta}")
        return (self.A * self.alpha / m) ** (1.0 / (1.0 - self.alpha))


@dataclass(frozen=True)
class CESProduction(Production):
    """f(k) = A (alpha k^rho + 1 - alpha)^(1/rho) + (1 - delta) k, rho = (eps-1)/eps."""

    A: float = 1.0
    alpha: float = 0.5
    eps: float = 0.5
    delta: float = 1.0
    name = "ces"

    def __post_init__(self):
        if not (self.A > 0 and 0 < self.alpha < 1 and self.eps > 0 and 0 <= self.delta <= 1):
            raise InvalidParameters("CES needs A > 0, alpha in (0,1), eps > 0, delta in [0,1]")
        if abs(self.eps - 1.0) < 1e-12:
            raise InvalidParameters("CES with eps = 1 is Cobb-Douglas; use CobbDouglas")

    @property
    def rho(self):
        return (self.eps - 1.0) / self.eps

    def _g(self, k):
        return self.alpha * k ** self.rho + 1.0 - self.alpha

    def f(self, k):
        return self.A * self._g(k) ** (1.0 / self.rho) + (1.0 - self.delta) * k

    def _h(self, k):
        # alpha + (1 - alpha) k^-rho, bounded away from overflow where k^rho is not
        with np.errstate(over="ignore"):
            return self.alpha + (1.0 - self.alpha) * np.power(np.asarray(k, dtype=float), -self.rho)

    def fp(self, k):
        r = self.rho
        with np.errstate(over="ignore", divide="ignore"):
            out = self.A * self.alpha * np.power(self._h(k), (1.0 - r) / r) + 1.0 - self.delta
        return out if np.ndim(out) else float(out)

    def fpp(self, k):
        r = self.rho
        k = np.asarray(k, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            out = (self.A * self.alpha * (1.0 - self.alpha) * (r - 1.0)
                   * np.power(k, -1.0 - r) * np.power(self._h(k), 1.0 / r - 2.0))
        return out if np.ndim(out) else float(out)


class Utility:
    """Two-period utility U(c1, c2) described through M = U1/U2."""

    name = "custom"
    beta: float

    def M(self, c1, c2):
        raise NotImplementedError

    def M1(self, c1, c2):
        raise NotImplementedError

    def M2(self, c1, c2):
        raise NotImplementedError

    def elasticity(self, c1, c2):
        """Intertemporal elasticity of substitution, 1/eps = -c1 M1 / M."""
        return -self.M(c1, c2) / (c1 * self.M1(c1, c2))

    def young_consumption_closed_form(self, omega, R):
        return None

    def check_quasiconcavity(self, c1s, c2s) -> bool:
        c1s = np.asarray(c1s, dtype=float)
        c2s = np.asarray(c2s, dtype=float)
        return bool(np.all(self.M1(c1s, c2s) < 0) and np.all(self.M2(c1s, c2s) > 0))


@dataclass(frozen=True)
class LogUtility(Utility):
    """log c1 + beta log c2."""

    beta: float = 0.9
    name = "log"

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameters("beta must be positive")

    def M(self, c1, c2):
        return c2 / (self.beta * c1)

    def M1(self, c1, c2):
        return -c2 / (self.beta * c1 * c1)

    def M2(self, c1, c2):
        return 1.0 / (self.beta * c1)

    def elasticity(self, c1=None, c2=None):
        return 1.0

    def young_consumption_closed_form(self, omega, R):
        return omega / (1.0 + self.beta)


@dataclass(frozen=True)
class CESUtility(Utility):
    """Constant-elasticity utility with M = (1/beta) (c1/c2)^(-1/eps)."""

    beta: float = 0.9
    eps: float = 1.0
    name = "ces"

    def __post_init__(self):
        if not (self.beta > 0 and self.eps > 0):
            raise InvalidParameters("beta and eps must be positive")

    def M(self, c1, c2):
        return (c1 / c2) ** (-1.0 / self.eps) / self.beta

    def M1(self, c1, c2):
        return -self.M(c1, c2) / (self.eps * c1)

    def M2(self, c1, c2):
        return self.M(c1, c2) / (self.eps * c2)

    def elasticity(self, c1=None, c2=None):
        return self.eps

    def young_consumption_closed_form(self, omega, R):
        return R * omega / (R + (self.beta * R) ** self.eps)


def production_from_config(spec: dict) -> Production:
    spec = dict(spec)
    kind = spec.pop("kind", "cobb_douglas")
    if kind == "cobb_douglas":
        return CobbDouglas(**{k: float(v) for k, v in spec.items()})
    if kind == "ces":
        return CESProduction(**{k: float(v) for k, v in spec.items()})
    raise InvalidParameters(f"unknown production kind {kind!r}")


def utility_from_config(spec: dict) -> Utility:
    spec = dict(spec)
    kind = spec.pop("kind", "log")
    if kind == "log":
        return LogUtility(**{k: float(v) for k, v in spec.items()})
    if kind == "ces":
        return CESUtility(**{k: float(v) for k, v in spec.items()})
    raise InvalidParameters(f"unknown utility kind {kind!r}")

