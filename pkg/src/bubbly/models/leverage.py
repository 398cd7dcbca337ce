"""Entrepreneurs with stochastic investment opportunities and a leverage limit.

phi = pi * lambda is the share of savings the productive agents can absorb;
c = phi beta / (1 - beta + phi beta) is the capital share of saving once land
absorbs the rest.  With a constant land dividend D the capital-labor ratio
follows y' = (c/G)(y (f'(y) + 1 - delta) + D G^-t).

The production function here is F(k, 1) without undepreciated capital;
depreciation is the separate parameter ``delta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bubbly import kernels
from bubbly.dynsys import EquilibriumPath, MapSystem, SteadyState, analyze_point, orbit
from bubbly.errors import DegenerateWage, InvalidParameters
from bubbly.models.primitives import CobbDouglas, Production


@dataclass(frozen=True)
class LeverageParams:
    beta: float
    pi: float
    lam: float
    delta: float
    G: float
    production: Production
    D: float = 0.0

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise InvalidParameters("beta must lie in (0, 1)")
        if not 0 < self.pi < 1:
            raise InvalidParameters("pi must lie in (0, 1)")
        if not self.lam >= 1:
            raise InvalidParameters("leverage limit lambda must be >= 1")
        if not self.phi < 1:
            raise InvalidParameters(f"phi = pi * lambda = {self.phi:.6g} must be < 1 "
                                    "(otherwise productive agents absorb all savings)")
        if not 0 <= self.delta <= 1:
            raise InvalidParameters("delta must lie in [0, 1]")
        if not self.G > 1:
            raise InvalidParameters("G must exceed 1")
        if self.D < 0:
            raise InvalidParameters("D must be nonnegative")
        if getattr(self.production, "delta", 1.0) != 1.0:
            raise InvalidParameters("production must be F(k, 1) itself (delta = 1 in the "
                                    "technology); depreciation is a separate parameter")

    @property
    def phi(self) -> float:
        return self.pi * self.lam

    @property
    def c(self) -> float:
        pb = self.phi * self.beta
        return pb / (1.0 - self.beta + pb)


@dataclass
class LeverageState:
    """Balanced-growth quantities as levels at t = 0; they all grow at G.

    W and P are dated t = 0, K_H and K_L are the holdings carried into t = 1.
    """

    y: float
    omega: float
    R: float
    P: float
    W: float
    K_H: float
    K_L: float
    kind: str = ""
    growth: float = 1.0

    def at(self, t: int) -> dict:
        g = self.growth ** t
        return {"y": self.y, "omega": self.omega * g, "R": self.R, "P": self.P * g,
                "W": self.W * g, "K_H": self.K_H * g, "K_L": self.K_L * g}

    def as_dict(self) -> dict:
        return {"kind": self.kind, "y": self.y, "omega": self.omega, "R": self.R, "P": self.P,
                "W": self.W, "K_H": self.K_H, "K_L": self.K_L}


def growth_of_wealth(params: LeverageParams, y, R):
    """beta (phi (f'(y) + 1 - delta) + (1 - phi) R): gross growth of aggregate wealth."""
    f = params.production
    return params.beta * (params.phi * (f.fp(y) + 1.0 - params.delta) + (1.0 - params.phi) * R)


def _state(params: LeverageParams, y, R, bubbly: bool, kind: str) -> LeverageState:
    f, G, pb = params.production, params.G, params.phi * params.beta
    W = G * y / pb                  # W_0, from labor clearing phi beta W_0 / y_1 = G
    P = (1.0 - params.phi) * params.beta * W if bubbly else 0.0
    K_H = pb * W                    # K^H_1
    K_L = (1.0 - params.phi) * params.beta * W - P
    return LeverageState(y, f.omega(y), R, P, W, K_H, K_L, kind, G)


def leverage_fundamental(params: LeverageParams) -> LeverageState:
    """Balanced growth with P = 0 and R = 1 - delta."""
    target = (params.G / params.beta - 1.0 + params.delta) / params.phi
    y = params.production.fp_inverse(target)
    return _state(params, y, 1.0 - params.delta, False, "fundamental")


def leverage_bubbly(params: LeverageParams) -> LeverageState:
    """Balanced growth with R = G and land price ((1-phi)/phi) y G^(t+1)."""
    y = params.production.fp_inverse(params.G / params.c - 1.0 + params.delta)
    return _state(params, y, params.G, True, "bubbly")


def bubbly_price(params: LeverageParams, t, y_b=None):
    y_b = leverage_bubbly(params).y if y_b is None else y_b
    return (1.0 - params.phi) / params.phi * y_b * params.G ** (np.asarray(t) + 1)


# ---------------------------------------------------------------------------
# dividend-injected dynamics

def leverage_injected_dynamics(params: LeverageParams) -> MapSystem:
    """Map in (y, c D G^(-t-1)); both coordinates are predetermined."""
    f, G, c, dl = params.production, params.G, params.c, params.delta
    k = c / G

    def h(x):
        return np.array([k * x[0] * (f.fp(x[0]) + 1.0 - dl) + x[1], x[1] / G])

    def jac(x):
        y = x[0]
        return np.array([[k * (f.fp(y) + 1.0 - dl + y * f.fpp(y)), 1.0], [0.0, 1.0 / G]])

    orbit_kernel = None
    if isinstance(f, CobbDouglas):
        A, alpha = f.A, f.alpha

        def orbit_kernel(x0, steps):
            return kernels.leverage_orbit_cd(float(x0[0]), float(x0[1]), A, alpha, dl, c, G,
                                             int(steps))

    return MapSystem(2, h, predetermined=(0, 1), jacobian=jac, orbit_kernel=orbit_kernel,
                     name="leverage")


def leverage_lambda1(params: LeverageParams, y_b=None) -> float:
    y_b = leverage_bubbly(params).y if y_b is None else y_b
    return 1.0 + params.c / params.G * y_b * params.production.fpp(y_b)


def leverage_bubbly_steady_state(params: LeverageParams) -> SteadyState:
    y_b = leverage_bubbly(params).y
    return analyze_point(leverage_injected_dynamics(params), [y_b, 0.0])


def leverage_locdet_condition(params: LeverageParams, y_b=None) -> bool:
    """y_b f''(y_b) > -2 G / c, i.e. lambda_1 > -1."""
    y_b = leverage_bubbly(params).y if y_b is None else y_b
    return y_b * params.production.fpp(y_b) > -2.0 * params.G / params.c


def leverage_es_bound(params: LeverageParams, y_b=None) -> float:
    """Elasticity of substitution above which the bubbly state is determinate."""
    f = params.production
    y_b = leverage_bubbly(params).y if y_b is None else y_b
    omega = f.omega(y_b)
    if not omega > 0:
        raise DegenerateWage(f"wage {omega} at y_b = {y_b} is not positive")
    return 0.5 * (1.0 - params.c * (1.0 - params.delta) / params.G) / (1.0 + y_b * f.fp(y_b) / omega)


def leverage_determinacy_predicted(params: LeverageParams) -> bool:
    y_b = leverage_bubbly(params).y
    return params.production.elasticity(y_b) > leverage_es_bound(params, y_b)


# ---------------------------------------------------------------------------
# paths and accounting

@dataclass
class LeveragePath:
    y: np.ndarray
    W: np.ndarray
    P: np.ndarray
    K_H: np.ndarray
    K_L: np.ndarray
    Y: np.ndarray
    R: np.ndarray
    D: float
    states: np.ndarray
    admissible_until: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_equilibrium_path(self) -> EquilibriumPath:
        return EquilibriumPath(self.states, series={"y": self.y, "W": self.W, "P": self.P,
                                                    "K_H": self.K_H, "K_L": self.K_L,
                                                    "Y": self.Y, "R": self.R},
                               diagnostics=dict(self.diagnostics))


def leverage_simulate(params: LeverageParams, y0: float, T: int) -> LeveragePath:
    """Forward path from y_0 with the constant dividend D (both predetermined)."""
    system = leverage_injected_dynamics(params)
    states = orbit(system, [y0, params.c * params.D / params.G], T + 1)
    return levels_from_states(params, states)


def levels_from_states(params: LeverageParams, states) -> LeveragePath:
    """Aggregates implied by y_0..y_{T+1}; series are indexed t = 0..T."""
    f, G, pb = params.production, params.G, params.phi * params.beta
    y = np.asarray(states, dtype=float)[:, 0]
    T = y.size - 2
    t = np.arange(T + 1)
    Gt = G ** t
    W = G * Gt * y[1:] / pb                     # W_t from labor clearing at t+1
    P = (1.0 - params.phi) * params.beta * W
    K_H = Gt * y[:-1]                           # K^H_t = N_t y_t
    K_L = np.zeros(T + 1)                       # idle capital is zero along these paths
    Y = f.fp(y[:-1]) * K_H
    R = (P[1:] + params.D) / P[:-1]
    out = LeveragePath(y[:-1], W, P, K_H, K_L, Y, R, params.D, np.asarray(states, dtype=float))
    out.admissible_until = first_inadmissible(params, out)
    return out


def first_inadmissible(params: LeverageParams, path: LeveragePath, tol: float = 1e-10):
    """First period with K_L < -tol or R outside [1 - delta, f'(y') + 1 - delta]."""
    f, dl = params.production, params.delta
    n = path.R.size
    for t in range(n):
        if path.K_L[t] < -tol:
            return t
        upper = f.fp(path.y[t + 1]) + 1.0 - dl
        if path.R[t] < 1.0 - dl - tol or path.R[t] > upper + tol:
            return t
    return None


def accounting_residuals(params: LeverageParams, path: LeveragePath) -> dict:
    """Relative residuals of the wealth, land-price, labor and capital-allocation identities."""
    pb, phi, beta, dl = params.phi * params.beta, params.phi, params.beta, params.delta
    f, G, D = params.production, params.G, params.D
    y, W, P, K_H, K_L, Y = path.y, path.W, path.P, path.K_H, path.K_L, path.Y
    T = y.size - 1
    Gt = G ** np.arange(T + 1)
    K = K_H + K_L
    scale = np.maximum(1.0, np.abs(W))
    res = {}
    # wealth recursion: W_t = (f'(y_t) + 1 - delta) phi beta W_{t-1} + P_t + D
    res["wealth"] = np.abs(W[1:] - ((f.fp(y[1:]) + 1 - dl) * pb * W[:-1] + P[1:] + D)) / scale[1:]
    res["land_price"] = np.abs(P - (1 - phi) * beta * W) / scale
    res["labor"] = np.abs(pb * W[:-1] / y[1:] - Gt[1:]) / np.maximum(1.0, Gt[1:])
    # resources: W_t = Y_t + (1 - delta) K_t + P_t + D
    res["resources"] = np.abs(W - (Y + (1 - dl) * K + P + D)) / scale
    X = Y + (1 - dl) * K + D
    res["capital_H"] = np.abs(K_H[1:] - (pb * X[:-1] + pb * P[:-1])) / scale[:-1]
    res["capital_L"] = np.abs(K_L[1:] - ((1 - phi) * beta * X[:-1]
                                         - (1 - beta + pb) * P[:-1])) / scale[:-1]
    res["capital"] = np.abs(K[1:] - (beta * X[:-1] - (1 - beta) * P[:-1])) / scale[:-1]
    res["saving"] = np.abs(K[1:] + P[:-1] - beta * W[:-1]) / scale[:-1]
    return res


def capital_allocation(phi, beta, resources, P):
    """(K^H', K^L', K') from resources Y + (1-delta)K and the land price."""
    K_H = phi * beta * resources + phi * beta * P
    K_L = (1 - phi) * beta * resources - (1 - beta + phi * beta) * P
    K = beta * resources - (1 - beta) * P
    return K_H, K_L, K
