"""Reduced-form economies W' = G(R) W, s(R) W = B.

Fundamental rates solve s(R) = 0, bubbly rates solve G(R) = R, and the
bubbly equilibrium prices the asset at P_t = p W_t with p in s(R_b).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from bubbly.errors import (
    InvalidParameters,
    NoBubblyEquilibrium,
    NonFiniteSaving,
    NoSignChange,
    PreconditionFailed,
)

log = logging.getLogger(__name__)

FUNDAMENTAL_ELIMINATED = "FundamentalEliminated"
NOT_ELIMINATED = "NotEliminated"


@dataclass
class ReducedFormEconomy:
    """``saving(R)`` returns either a number or an interval (lo, hi)."""

    growth: Callable[[float], float]
    saving: Callable[[float], object]
    name: str = "custom"
    asset_supply: float = 0.0
    fundamental_bracket: Optional[tuple[float, float]] = None
    bubbly_upper: Optional[float] = None
    wealth0: float = 1.0
    jump_threshold: float = 1e-2
    closed_form: dict = field(default_factory=dict)

    def saving_interval(self, R: float) -> tuple[float, float]:
        v = self.saving(R)
        if np.ndim(v) == 0:
            lo = hi = float(v)
        else:
            lo, hi = (float(x) for x in v)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise NonFiniteSaving(f"saving rate not finite at R = {R}")
        return min(lo, hi), max(lo, hi)

    def saving_rate(self, R: float) -> float:
        """Midpoint selection from the saving correspondence."""
        lo, hi = self.saving_interval(R)
        if hi > lo:
            log.info("saving correspondence multivalued at R=%r: [%r, %r], midpoint used", R, lo, hi)
        return 0.5 * (lo + hi)


@dataclass
class BubbleSolution:
    R_f: float
    R_b: float
    saving_rate_at_Rb: float
    saving_interval_at_Rb: tuple[float, float] = None
    notes: list = field(default_factory=list)

    def price_path(self, t, W0: float = 1.0):
        """P_t = p W0 R_b^t; built by repeated multiplication so that the
        one-period return equals R_b up to the final rounding."""
        t = np.asarray(t)
        T = int(np.max(t)) if t.size else 0
        P = np.cumprod(np.r_[self.saving_rate_at_Rb * W0, np.full(T, self.R_b)])
        return float(P[int(t)]) if np.ndim(t) == 0 else P[t.astype(int)]

    def as_dict(self) -> dict:
        return {"R_f": self.R_f, "R_b": self.R_b, "saving_rate": self.saving_rate_at_Rb,
                "saving_interval": list(self.saving_interval_at_Rb or ()),
                "notes": list(self.notes)}


@dataclass(frozen=True)
class NecessityVerdict:
    R: float
    G_d: float
    G: float
    verdict: str
    violated: Optional[str] = None

    @property
    def eliminated(self) -> bool:
        return self.verdict == FUNDAMENTAL_ELIMINATED

    def __bool__(self):
        return self.eliminated

    def as_dict(self) -> dict:
        return {"R": self.R, "G_d": self.G_d, "G": self.G, "verdict": self.verdict,
                "violated": self.violated}


def _bisect(fn, lo, hi):
    return optimize.bisect(fn, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)


def solve_fundamental_rate(econ: ReducedFormEconomy, bracket=None, tol: float = 1e-12) -> float:
    """R_f with s(R_f) = 0 by bisection on the midpoint saving rate."""
    bracket = bracket or econ.fundamental_bracket
    if bracket is None:
        raise InvalidParameters("a bracket for the fundamental rate is required")
    lo, hi = (float(x) for x in bracket)
    if not 0 < lo < hi:
        raise InvalidParameters(f"bad bracket {bracket}")
    slo, shi = econ.saving_rate(lo), econ.saving_rate(hi)
    if slo == 0.0:
        return lo
    if shi == 0.0:
        return hi
    if slo * shi > 0:
        raise NoSignChange(f"saving rate has one sign on [{lo}, {hi}] ({slo:.3g}, {shi:.3g})",
                           bracket=(lo, hi), values=(slo, shi))
    R = _bisect(econ.saving_rate, lo, hi)
    if abs(econ.saving_rate(R)) > tol:
        # steep saving function: the root is bracketed to the last ulp anyway
        log.info("|s(R_f)| = %.3e above tol at ulp resolution", abs(econ.saving_rate(R)))
    return R


def default_bubbly_upper(econ: ReducedFormEconomy, R_f: float, n: int = 1000) -> float:
    if econ.bubbly_upper is not None:
        return float(econ.bubbly_upper)
    grid = np.linspace(R_f, max(10.0, 2.0 * R_f), n)
    sup = max(float(econ.growth(R)) for R in grid)
    return max(10.0, 2.0 * sup)


def solve_bubbly_rate(econ: ReducedFormEconomy, R_f: float, upper: Optional[float] = None,
                      tol: float = 1e-10) -> float:
    """R_b in (R_f, upper) with G(R_b) = R_b by bisection on G(R) - R."""
    gap = econ.growth(R_f) - R_f
    if not gap > 0:
        raise PreconditionFailed(f"no low-interest gap: G(R_f) - R_f = {gap:.3g} at R_f = {R_f}")
    upper = default_bubbly_upper(econ, R_f) if upper is None else float(upper)
    lo = R_f + 1e-9
    g = lambda R: econ.growth(R) - R
    glo, ghi = g(lo), g(upper)
    if not (glo > 0 > ghi):
        raise NoSignChange(f"G(R) - R does not change sign on [{lo}, {upper}]",
                           bracket=(lo, upper), values=(glo, ghi))
    R = _bisect(g, lo, upper)
    if abs(g(R)) > tol:
        raise NoSignChange(f"|G(R_b) - R_b| = {abs(g(R)):.3e} exceeds tol", bracket=(lo, upper),
                           values=(glo, ghi))
    return R


def solve_bubble(econ: ReducedFormEconomy, bracket=None, upper=None,
                 tol: float = 1e-10) -> BubbleSolution:
    """Fundamental rate, bubbly rate and saving rate of the bubbly equilibrium."""
    R_f = solve_fundamental_rate(econ, bracket)
    R_b = solve_bubbly_rate(econ, R_f, upper, tol)
    lo, hi = econ.saving_interval(R_b)
    notes = []
    if hi > lo:
        notes.append(f"saving correspondence is [{lo!r}, {hi!r}] at R_b; midpoint selected")
    p = 0.5 * (lo + hi)
    if not hi > 0:
        raise NoBubblyEquilibrium(f"s(R_b) = [{lo}, {hi}] contains no positive saving rate")
    if not p > 0:
        p = hi
        notes.append("midpoint not positive; upper end of s(R_b) selected")
    return BubbleSolution(R_f, R_b, p, (lo, hi), notes)


def _strictly_below(x, y, rtol):
    return y - x > rtol * max(abs(x), abs(y))


def check_necessity(R_limit: float, G_d: float, G: float,
                    rtol: float = 1e-12) -> NecessityVerdict:
    """Fundamental steady state is eliminated iff R < G_d < G.

    Both inequalities are strict; gaps within ``rtol`` (relative) count as
    ties, so 1.2/1.5 computed in binary does not fall below the float 0.8.
    """
    if not (R_limit > 0 and G_d > 0 and G > 0):
        raise InvalidParameters("rates must be positive")
    if not _strictly_below(R_limit, G_d, rtol):
        return NecessityVerdict(R_limit, G_d, G, NOT_ELIMINATED, "R < G_d")
    if not _strictly_below(G_d, G, rtol):
        return NecessityVerdict(R_limit, G_d, G, NOT_ELIMINATED, "G_d < G")
    return NecessityVerdict(R_limit, G_d, G, FUNDAMENTAL_ELIMINATED)


def check_continuity(econ: ReducedFormEconomy, lo: float, hi: float, n: int = 1000,
                     threshold: Optional[float] = None) -> tuple[bool, float]:
    """Largest jump of G between neighbouring sample points."""
    grid = np.linspace(lo, hi, n)
    vals = np.array([econ.growth(R) for R in grid])
    jump = float(np.max(np.abs(np.diff(vals))))
    thr = econ.jump_threshold if threshold is None else threshold
    return jump <= thr, jump


def check_growth_below_rate(econ: ReducedFormEconomy, lo: float, hi: float,
                            n: int = 1000) -> bool:
    """G(R) < R at every sampled point of [lo, hi]."""
    grid = np.linspace(lo, hi, n)
    return all(econ.growth(R) < R for R in grid)
