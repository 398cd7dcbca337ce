"""Log-utility agents with idiosyncratic storage risk z (finite support).

Each agent puts a fraction eta of savings into the risky technology and
the rest into the risk-free asset; G(R) = beta E[z eta + R (1 - eta)] and
s(R) = 1 - eta(R).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from bubbly.errors import IndeterminatePortfolio, InfeasiblePortfolio, InvalidParameters
from bubbly.reduced_form import ReducedFormEconomy


@dataclass(frozen=True)
class StorageRiskParams:
    beta: float
    z: tuple
    probs: tuple = None

    def __post_init__(self):
        z = tuple(float(v) for v in np.atleast_1d(self.z))
        probs = self.probs
        if probs is None:
            probs = tuple(1.0 / len(z) for _ in z)
        probs = tuple(float(v) for v in np.atleast_1d(probs))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "probs", probs)
        if not 0 < self.beta < 1:
            raise InvalidParameters("beta must lie in (0, 1)")
        if len(z) == 0 or len(z) != len(probs):
            raise InvalidParameters("z and probs must be nonempty and of equal length")
        if any(v <= 0 for v in z):
            raise InvalidParameters("productivity values must be positive")
        if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidParameters("probabilities must be nonnegative and sum to 1")

    @property
    def _zp(self):
        return np.array(self.z), np.array(self.probs)

    @property
    def mean_z(self) -> float:
        return math.fsum(p * v for v, p in zip(self.z, self.probs))

    @property
    def mean_inv_z(self) -> float:
        return math.fsum(p / v for v, p in zip(self.z, self.probs))

    @property
    def fundamental_rate(self) -> float:
        return 1.0 / self.mean_inv_z

    @property
    def degenerate(self) -> bool:
        support = {v for v, p in zip(self.z, self.probs) if p > 0}
        return len(support) == 1


def portfolio_foc(params: StorageRiskParams, eta, R):
    """E[(z - R) / (z eta + R (1 - eta))]."""
    z, p = params._zp
    with np.errstate(divide="ignore"):
        return float(np.sum(p * (z - R) / (z * eta + R * (1.0 - eta))))


def eta_max(params: StorageRiskParams, R) -> float:
    """Largest eta keeping z eta + R (1 - eta) > 0 for every outcome."""
    low = [R / (R - v) for v, p in zip(params.z, params.probs) if p > 0 and v < R]
    return min(low) if low else math.inf


def storage_portfolio(params: StorageRiskParams, R: float) -> float:
    """Share of wealth in the risky technology maximizing E[log(z eta + R(1-eta))]."""
    if not R > 0:
        raise InvalidParameters("R must be positive")
    if params.degenerate:
        c = next(v for v, p in zip(params.z, params.probs) if p > 0)
        if R == c:
            raise IndeterminatePortfolio(f"indifferent between assets at R = {R}",
                                         interval=(0.0, math.inf))
        if R > c:
            return 0.0
        raise InfeasiblePortfolio(f"riskless technology dominates the bond (R = {R} < {c})")
    if R >= params.mean_z:
        return 0.0
    hi = eta_max(params, R)
    if not math.isfinite(hi):
        raise InfeasiblePortfolio(f"R = {R} below every productivity outcome: demand unbounded")
    top = hi * (1.0 - 1e-12)
    if portfolio_foc(params, top, R) > 0:
        return top
    return optimize.brentq(lambda e: portfolio_foc(params, e, R), 0.0, top,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def storage_growth(params: StorageRiskParams, R: float, eta: float | None = None) -> float:
    eta = storage_portfolio(params, R) if eta is None else eta
    return params.beta * (params.mean_z * eta + R * (1.0 - eta))


def storage_bubble_condition(params: StorageRiskParams) -> bool:
    return params.beta * params.mean_z * params.mean_inv_z > 1.0


def storage_reduced_form(params: StorageRiskParams) -> ReducedFormEconomy:
    def eta_interval(R):
        try:
            e = storage_portfolio(params, R)
            return e, e
        except IndeterminatePortfolio:
            # indifference: report the no-borrowing slice eta in [0, 1]
            return 0.0, 1.0

    def saving(R):
        lo, hi = eta_interval(R)
        return 1.0 - hi, 1.0 - lo

    def growth(R):
        lo, hi = eta_interval(R)
        return storage_growth(params, R, 0.5 * (lo + hi))

    zmin = min(v for v, p in zip(params.z, params.probs) if p > 0)
    Rf = params.fundamental_rate
    return ReducedFormEconomy(
        growth=growth, saving=saving, name="storage_risk",
        fundamental_bracket=(zmin + 1e-9 * (Rf - zmin) if Rf > zmin else 0.5 * zmin,
                             params.mean_z),
        bubbly_upper=2.0 * params.mean_z,
        wealth0=1.0,
    )
