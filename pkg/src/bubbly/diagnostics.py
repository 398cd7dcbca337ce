"""Equilibrium-path residual checks and present-value divergence certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from bubbly.errors import PreconditionFailed, ShapeMismatch, UnknownModel
from bubbly.reduced_form import FUNDAMENTAL_ELIMINATED, check_necessity

CERTIFICATE_HORIZONS = (10, 100, 1000)


@dataclass
class ResidualReport:
    model: str
    residuals: dict
    tol: float
    skipped: dict = field(default_factory=dict)

    @property
    def maxima(self) -> dict:
        out = {}
        for k, v in self.residuals.items():
            v = np.asarray(v, dtype=float)
            v = v[np.isfinite(v)]
            out[k] = float(v.max()) if v.size else 0.0
        return out

    @property
    def overall_max(self) -> float:
        m = self.maxima
        return max(m.values()) if m else 0.0

    @property
    def passed(self) -> bool:
        return self.overall_max <= self.tol

    def failing_periods(self, name: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.residuals[name]) > self.tol)

    def as_dict(self) -> dict:
        return {"model": self.model, "tol": self.tol, "max_residuals": self.maxima,
                "overall_max": self.overall_max, "passed": self.passed,
                "skipped_periods": {k: list(map(int, v)) for k, v in self.skipped.items()}}


def _series(path, name):
    if hasattr(path, name) and getattr(path, name) is not None:
        return np.asarray(getattr(path, name), dtype=float)
    series = getattr(path, "series", None) or {}
    if name in series:
        return np.asarray(series[name], dtype=float)
    return None


def _require(path, names):
    out = []
    for n in names:
        v = _series(path, n)
        if v is None:
            raise ShapeMismatch(f"path is missing the series {n!r}")
        out.append(v)
    return out


def _no_arbitrage(P, D, R):
    """|R_t P_t - P_{t+1} - D_{t+1}| / max(1, P_t); undefined (nan) where P_t = 0."""
    res = np.abs(R * P[:-1] - P[1:] - D[1:]) / np.maximum(1.0, P[:-1])
    res[P[:-1] == 0] = np.nan
    return res


def _verify_samuelson(params, path, tol):
    P, D = _require(path, ["P", "D"])
    T = P.size - 1
    if D.size != P.size:
        raise ShapeMismatch("P and D must have the same length")
    Gt = params.G ** np.arange(T + 1)
    c_y = _series(path, "c_y")
    c_o = _series(path, "c_o")
    if c_y is None:
        c_y = params.a * Gt - P
    if c_o is None:
        c_o = params.b * Gt + P + D
    if c_y.size != T + 1 or c_o.size != T + 1:
        raise ShapeMismatch("consumption series must match the price series")
    R_series = _series(path, "R")
    R = np.empty(T)
    for t in range(T):
        if P[t] > 0:
            R[t] = (P[t + 1] + D[t + 1]) / P[t]
        elif R_series is not None and R_series.size >= T:
            R[t] = R_series[t]
        else:
            R[t] = params.b * params.G / (params.beta * params.a)
    # Euler equation with allocations implied by prices and endowments
    cy_p = params.a * Gt - P
    co_p = params.b * Gt + P + D
    euler = np.abs(1.0 - params.beta * R * cy_p[:-1] / co_p[1:])
    noarb = _no_arbitrage(P, D, R)
    budget = np.maximum(np.abs(c_y + P - params.a * Gt), np.abs(c_o - params.b * Gt - P - D)) / Gt
    positivity = np.where((c_y > 0) & (c_o > 0), 0.0, np.inf)
    res = {"euler": euler, "no_arbitrage": noarb, "budget": budget, "positivity": positivity}
    skipped = {"no_arbitrage": np.flatnonzero(P[:-1] == 0)}
    return ResidualReport("samuelson", res, tol, skipped)


def _verify_tirole(params, path, tol):
    from bubbly.models.tirole import foc_residual
    k, P, D, N, c_y = _require(path, ["k", "P", "D", "N", "c_y"])
    f, G = params.production, params.G
    T = k.size - 1
    if not (P.size == D.size == N.size == T + 1 and c_y.size == T):
        raise ShapeMismatch("Tirole path series have inconsistent lengths")
    R = f.fp(k[1:])
    noarb = _no_arbitrage(P, D, R)
    omega = f.omega(k[:-1])
    clearing = np.abs(omega - c_y - G * k[1:] - P[:-1] / N[:-1]) / np.maximum(1.0, omega)
    dividend = np.abs(D[1:] - params.G_d * D[:-1]) / np.maximum(1.0, D[:-1])
    euler = np.array([abs(foc_residual(params.utility, c_y[t], omega[t], R[t])) / R[t]
                      for t in range(T)])
    res = {"euler": euler, "no_arbitrage": noarb, "market_clearing": clearing,
           "dividend": dividend}
    return ResidualReport("tirole", res, tol, {"no_arbitrage": np.flatnonzero(P[:-1] == 0)})


def _verify_leverage(params, path, tol):
    from bubbly.models.leverage import accounting_residuals
    y, W, P, K_H, K_L, Y, R = _require(path, ["y", "W", "P", "K_H", "K_L", "Y", "R"])
    if not (W.size == P.size == K_H.size == K_L.size == Y.size == y.size
            and R.size == y.size - 1):
        raise ShapeMismatch("leverage path series have inconsistent lengths")
    res = accounting_residuals(params, path)
    res["no_arbitrage"] = _no_arbitrage(P, np.full(P.size, params.D), R)
    f, dl = params.production, params.delta
    ynext = np.asarray(path.states, dtype=float)[1:R.size + 1, 0] if hasattr(path, "states") \
        else y[1:]
    upper = f.fp(ynext) + 1.0 - dl
    res["rate_band"] = np.maximum(0.0, np.maximum((1.0 - dl) - R, R - upper))
    res["idle_capital"] = np.maximum(0.0, -K_L)
    return ResidualReport("leverage", res, tol, {"no_arbitrage": np.flatnonzero(P[:-1] == 0)})


_VERIFIERS = {"samuelson": _verify_samuelson, "tirole": _verify_tirole,
              "leverage": _verify_leverage}


def verify_path(model: str, params, path, tol: float = 1e-10) -> ResidualReport:
    """Evaluate every equilibrium condition of ``model`` along ``path``."""
    try:
        fn = _VERIFIERS[model]
    except KeyError:
        raise UnknownModel(f"no path verifier for model {model!r}; "
                           f"known: {sorted(_VERIFIERS)}") from None
    return fn(params, path, tol)


@dataclass
class NecessityCertificate:
    R_lim: float
    G_d: float
    G: float
    D0: float
    horizons: tuple
    log10_sums: tuple
    verdict: str
    violated: str | None
    growth_observed: float
    growth_predicted: float

    @property
    def eliminated(self) -> bool:
        return self.verdict == FUNDAMENTAL_ELIMINATED

    @property
    def increasing(self) -> bool:
        return all(b > a for a, b in zip(self.log10_sums, self.log10_sums[1:]))

    @property
    def growth_consistent(self) -> bool:
        """Last-to-middle sum ratio matches (G_d/R)^(T3-T2) within 1% (log10 scale)."""
        if not self.eliminated:
            return False
        return abs(self.growth_observed - self.growth_predicted) <= math.log10(1.01)

    def as_dict(self) -> dict:
        return {"R_lim": self.R_lim, "G_d": self.G_d, "G": self.G, "D0": self.D0,
                "horizons": list(self.horizons), "log10_partial_sums": list(self.log10_sums),
                "verdict": self.verdict, "violated": self.violated,
                "log10_growth_observed": self.growth_observed,
                "log10_growth_predicted": self.growth_predicted,
                "increasing": self.increasing}


def partial_pv_log10(R: float, G_d: float, D0: float, T: int) -> float:
    """log10 of sum_{t=0}^{T} D0 (G_d/R)^t, evaluated in log space."""
    t = np.arange(T + 1)
    return float((math.log(D0) + logsumexp(t * math.log(G_d / R))) / math.log(10))


def certify_elimination(R_lim: float, G_d: float, G: float, D0: float,
                        horizons=CERTIFICATE_HORIZONS) -> NecessityCertificate:
    """Partial present values of D0 G_d^t discounted at R_lim, with the verdict."""
    if not D0 > 0:
        raise PreconditionFailed("certificate needs a positive initial dividend D0")
    v = check_necessity(R_lim, G_d, G)
    sums = tuple(partial_pv_log10(R_lim, G_d, D0, T) for T in horizons)
    observed = sums[-1] - sums[-2]
    predicted = (horizons[-1] - horizons[-2]) * math.log10(G_d / R_lim)
    return NecessityCertificate(R_lim, G_d, G, D0, tuple(horizons), sums, v.verdict, v.violated,
                                observed, predicted)
