"""OLG production economy with a bubble asset (capital + asset + dividends).

State xi = (k, P/N, D/N): capital per young agent, asset price and dividend
per young agent.  Capital and the dividend are predetermined, the price is
free.  Young consumption c^y(k, k') solves U1 = f'(k') U2 with wage omega(k).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from bubbly.dynsys import (
    EquilibriumPath,
    ImplicitSystem,
    MapSystem,
    SteadyState,
    analyze_point,
    solve_saddle_path,
)
from bubbly.errors import (
    DegenerateConsumption,
    FocSolveFailed,
    InvalidParameters,
    NecessityViolated,
    NoBubblyEquilibrium,
    NoRoot,
)
from bubbly.models.primitives import LogUtility, Production, Utility
from bubbly.reduced_form import ReducedFormEconomy


@dataclass(frozen=True)
class TiroleParams:
    production: Production
    utility: Utility
    G: float
    G_d: float = 1.0
    D0: float = 0.0
    N0: float = 1.0
    closed_form_consumption: bool = True

    def __post_init__(self):
        if not self.G > 0:
            raise InvalidParameters("G must be positive")
        if not self.N0 > 0:
            raise InvalidParameters("N0 must be positive")
        if self.D0 < 0:
            raise InvalidParameters("D0 must be nonnegative")
        if self.D0 > 0 and not self.G_d > 0:
            raise InvalidParameters("G_d must be positive when D0 > 0")

    @property
    def q(self) -> float:
        return self.G_d / self.G

    def check_primitives(self, ks=None) -> None:
        """Sampled concavity of f and quasi-concavity of U."""
        f = self.production
        if ks is None:
            ks = np.geomspace(1e-3, 1e2, 200)
        if not f.check_concavity(ks):
            raise InvalidParameters("production needs f' > 0 and f'' < 0 on the probed range")
        c = np.linspace(0.05, 2.0, 40)
        c1, c2 = np.meshgrid(c, c)
        if not self.utility.check_quasiconcavity(c1, c2):
            raise InvalidParameters("utility must satisfy M1 < 0 < M2 on the probed range")


# ---------------------------------------------------------------------------
# household

def foc_residual(utility: Utility, c, omega, R):
    return utility.M(c, R * (omega - c)) - R


def young_consumption_foc(utility: Utility, omega: float, R: float) -> float:
    """Root of M(c, R(omega - c)) = R on (0, omega); the residual is decreasing."""
    if not (omega > 0 and R > 0):
        raise FocSolveFailed(f"need omega > 0 and R > 0 (omega={omega}, R={R})")
    lo, hi = 1e-12 * omega, (1.0 - 1e-12) * omega
    g = lambda c: foc_residual(utility, c, omega, R)
    glo, ghi = g(lo), g(hi)
    if not (glo > 0 > ghi):
        raise FocSolveFailed(f"no root of the consumption FOC in (0, {omega})")
    return optimize.brentq(g, lo, hi, xtol=1e-15 * omega, rtol=4 * np.finfo(float).eps,
                           maxiter=200)


def young_consumption(params: TiroleParams, k, k_next, numeric: bool = False) -> float:
    f = params.production
    omega = f.omega(k)
    R = f.fp(k_next)
    if not numeric and params.closed_form_consumption:
        c = params.utility.young_consumption_closed_form(omega, R)
        if c is not None:
            return c
    return young_consumption_foc(params.utility, omega, R)


def consumption_partials(params: TiroleParams, k, k_next):
    """(c^y, dc^y/dk, dc^y/dk') from implicit differentiation of the FOC."""
    f, u = params.production, params.utility
    c = young_consumption(params, k, k_next)
    omega, R = f.omega(k), f.fp(k_next)
    c2 = R * (omega - c)
    M1, M2 = u.M1(c, c2), u.M2(c, c2)
    den = M1 - R * M2
    dk = -R * M2 * f.omega_prime(k) / den
    dkn = -(M2 * (omega - c) - 1.0) * f.fpp(k_next) / den
    return c, dk, dkn


# ---------------------------------------------------------------------------
# steady states

def bubbly_capital(params: TiroleParams) -> float:
    return params.production.fp_inverse(params.G)


def saving_per_capita(params: TiroleParams, k):
    """omega(k) - c^y(k, k) - G k: asset demand per young agent at constant k."""
    return params.production.omega(k) - young_consumption(params, k, k) - params.G * k


def fundamental_capital_roots(params: TiroleParams, n: int = 2000, lo=None, hi=None):
    """Positive roots of the stationary asset demand, by grid scan + brentq."""
    kb = bubbly_capital(params)
    lo = lo or 1e-6 * kb
    hi = hi or 1e4 * kb
    grid = np.geomspace(lo, hi, n)
    vals = []
    for k in grid:
        try:
            vals.append(saving_per_capita(params, k))
        except (FocSolveFailed, ArithmeticError, ValueError):
            vals.append(math.nan)
    vals = np.asarray(vals)
    roots = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            roots.append(optimize.brentq(lambda k: saving_per_capita(params, k),
                                         grid[i], grid[i + 1], xtol=1e-300,
                                         rtol=4 * np.finfo(float).eps))
        elif a == 0.0:
            roots.append(float(grid[i]))
    return roots, kb


def fundamental_capital(params: TiroleParams) -> tuple[float, list]:
    """k_f: smallest root above k_b when one exists, otherwise the largest root."""
    roots, kb = fundamental_capital_roots(params)
    if not roots:
        raise NoRoot("stationary asset demand has no positive root", probed=(1e-6 * kb, 1e4 * kb))
    above = [k for k in roots if k > kb]
    return (min(above) if above else max(roots)), roots


def fundamental_capital_closed_form(beta, A, alpha, G):
    """k_f for log utility and f = A k^alpha + (1-delta) k."""
    return (beta * A * (1 - alpha) / (G * (1 + beta))) ** (1.0 / (1.0 - alpha))


@dataclass
class TiroleSteadyStates:
    k_f: float
    R_f: float
    k_b: float
    R_b: float
    bubble: float
    fundamental: SteadyState
    bubbly: SteadyState | None
    all_fundamental_roots: list

    @property
    def low_interest(self) -> bool:
        return self.R_f < self.R_b


def tirole_steady_states(params: TiroleParams) -> TiroleSteadyStates:
    f = params.production
    k_f, roots = fundamental_capital(params)
    k_b = bubbly_capital(params)
    bub = saving_per_capita(params, k_b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NecessityViolated)
        system = tirole_map(params, k0=k_b)
    fund = analyze_point(system, [k_f, 0.0, 0.0])
    bubbly = analyze_point(system, [k_b, bub, 0.0]) if bub > 0 else None
    return TiroleSteadyStates(k_f, f.fp(k_f), k_b, params.G, bub, fund, bubbly, roots)


# ---------------------------------------------------------------------------
# dynamical system

def tirole_residual(params: TiroleParams):
    f, G, q = params.production, params.G, params.q

    def H(xi, eta):
        c = young_consumption(params, xi[0], eta[0])
        return np.array([
            eta[1] + eta[2] - xi[1] / G * f.fp(eta[0]),
            xi[1] + G * eta[0] + c - f.omega(xi[0]),
            eta[2] - q * xi[2],
        ])
    return H


def tirole_step(params: TiroleParams):
    """Explicit one-step map.  States whose price leaves no room for capital
    come back with an infinite price coordinate (price too high)."""
    f, G, q = params.production, params.G, params.q
    closed = params.closed_form_consumption and \
        params.utility.young_consumption_closed_form(1.0, 1.0) is not None
    log_like = isinstance(params.utility, LogUtility) and params.closed_form_consumption

    def step(xi):
        k, x, d = float(xi[0]), float(xi[1]), float(xi[2])
        omega = f.omega(k)
        if not (k > 0 and omega > x):
            return np.array([math.nan, math.inf, q * d])
        if log_like:
            c = params.utility.young_consumption_closed_form(omega, 1.0)
            kn = (omega - c - x) / G
            if not kn > 0:
                return np.array([math.nan, math.inf, q * d])
        else:
            g = lambda kn: x + G * kn + young_consumption(params, k, kn) - omega
            kn = _nearest_root(g, k, (omega - x) / G)
            if kn is None:
                return np.array([math.nan, math.inf, q * d])
        dn = q * d
        xn = x / G * f.fp(kn) - dn
        return np.array([kn, xn, dn])

    step.closed = closed
    return step


def _safe(g, x):
    try:
        v = g(x)
    except (FocSolveFailed, ArithmeticError):
        return math.nan
    return v


def _nearest_root(g, x0, upper, ratio=2.0 ** 0.25, max_expand=160):
    """Root of g in (0, upper) closest to x0 on a log scale.

    The market-clearing equation for next-period capital can have several
    roots when young consumption rises with the interest rate; the locally
    relevant branch is the one nearest the current capital stock.
    """
    x0 = min(x0, upper * (1.0 - 1e-12))
    g0 = _safe(g, x0)
    if g0 == 0.0:
        return x0
    lo_x, lo_g = x0, g0
    hi_x, hi_g = x0, g0
    up_done = down_done = False
    for _ in range(max_expand):
        if not up_done:
            nx = min(hi_x * ratio, upper)
            ng = _safe(g, nx)
            if math.isfinite(ng) and math.isfinite(hi_g) and ng * hi_g <= 0:
                a, b = hi_x, nx
                break
            hi_x, hi_g = nx, ng
            up_done = nx >= upper
        if not down_done:
            nx = lo_x / ratio
            ng = _safe(g, nx)
            if math.isfinite(ng) and math.isfinite(lo_g) and ng * lo_g <= 0:
                a, b = nx, lo_x
                break
            lo_x, lo_g = nx, ng
            down_done = nx < 1e-300
        if up_done and down_done:
            return None
    else:
        return None
    return optimize.brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=300)


def tirole_jacobian(params: TiroleParams):
    """Analytic Jacobian of the explicit map at any admissible state."""
    f, G, q = params.production, params.G, params.q
    step = tirole_step(params)

    def jac(xi):
        kn = step(xi)[0]
        _, c1, c2 = consumption_partials(params, xi[0], kn)
        s = G + c2
        p = f.omega_prime(xi[0]) - c1
        dk = np.array([p / s, -1.0 / s, 0.0])
        g = xi[1] / G * f.fpp(kn)
        return np.array([
            dk,
            g * dk + np.array([0.0, f.fp(kn) / G, -q]),
            [0.0, 0.0, q],
        ])
    return jac


def tirole_system(params: TiroleParams) -> ImplicitSystem:
    """H(xi, eta) = 0 with predetermined capital and dividend."""
    return ImplicitSystem(3, tirole_residual(params), predetermined=(0, 2),
                          solve_next=tirole_step(params), jacobian=tirole_jacobian(params),
                          name="tirole")


def tirole_map(params: TiroleParams, k0: float | None = None) -> MapSystem:
    """Explicit map with the price bracket (0, omega(k0))."""
    k0 = bubbly_capital(params) if k0 is None else k0
    return MapSystem(3, tirole_step(params), predetermined=(0, 2),
                     jacobian=tirole_jacobian(params),
                     free_bracket=(0.0, float(params.production.omega(k0))), name="tirole")


@dataclass
class JacobianTerms:
    p: float
    q: float
    r: float
    s: float
    c1: float
    c2: float
    omega_prime: float
    bubble: float
    matrix: np.ndarray

    def signs_hold(self) -> bool:
        return self.p > 0 and 0 < self.q < 1 and self.r > 0 and self.s > 0


def tirole_jacobian_terms(params: TiroleParams) -> JacobianTerms:
    """Blocks of Dh at the bubbly steady state.

    r = -(b*/G) f''(k_b) uses the bubble per capita b*, which is what the
    derivative of the no-arbitrage residual in the next-period capital gives.
    """
    f, G, q = params.production, params.G, params.q
    k = bubbly_capital(params)
    bub = saving_per_capita(params, k)
    _, c1, c2 = consumption_partials(params, k, k)
    wp = f.omega_prime(k)
    p = wp - c1
    r = -bub / G * f.fpp(k)
    s = G + c2
    m = np.array([[p / s, -1.0 / s, 0.0],
                  [-p * r / s, 1.0 + r / s, -q],
                  [0.0, 0.0, q]])
    return JacobianTerms(p, q, r, s, c1, c2, wp, bub, m)


def tirole_eis_bound(params: TiroleParams, k_b: float | None = None) -> float:
    """Lower bound on the elasticity of substitution for local determinacy."""
    f, G = params.production, params.G
    k = bubbly_capital(params) if k_b is None else k_b
    omega = f.omega(k)
    c = young_consumption(params, k, k)
    if not (0 < c < omega):
        raise DegenerateConsumption(f"young consumption {c} not in (0, {omega})")
    return 1.0 + G * G / f.fpp(k) * omega / (c * (omega - c))


def tirole_suff_condition(params: TiroleParams) -> bool:
    """G + dc^y/dk' > 0 at the bubbly steady state."""
    k = bubbly_capital(params)
    _, _, c2 = consumption_partials(params, k, k)
    return params.G + c2 > 0


def cobb_douglas_bound(alpha: float, delta: float, G: float) -> float:
    return 1.0 - 4.0 * alpha / (1.0 - alpha) ** 2 * (1.0 - (1.0 - delta) / G) ** -2


def tirole_determinacy_predicted(params: TiroleParams) -> bool:
    k = bubbly_capital(params)
    f = params.production
    c = young_consumption(params, k, k)
    eps = params.utility.elasticity(c, params.G * (f.omega(k) - c))
    return eps > tirole_eis_bound(params, k)


# ---------------------------------------------------------------------------
# paths

@dataclass
class TirolePath:
    k: np.ndarray
    P: np.ndarray
    D: np.ndarray
    N: np.ndarray
    c_y: np.ndarray
    c_o: np.ndarray
    R: np.ndarray
    states: np.ndarray
    diagnostics: dict

    def as_equilibrium_path(self) -> EquilibriumPath:
        return EquilibriumPath(self.states, series={"k": self.k, "P": self.P, "D": self.D,
                                                    "c_y": self.c_y, "c_o": self.c_o,
                                                    "R": self.R},
                               diagnostics=dict(self.diagnostics))


def levels_from_states(params: TiroleParams, states) -> TirolePath:
    f = params.production
    s = np.asarray(states, dtype=float)
    T = s.shape[0] - 1
    N = params.N0 * params.G ** np.arange(T + 1)
    k = s[:, 0]
    R = f.fp(k[1:])
    c_y = np.array([young_consumption(params, k[t], k[t + 1]) for t in range(T)])
    # old at t+1 consume R_t (omega_t - c_t); index c_o by the period of consumption
    c_o = np.r_[math.nan, R * (f.omega(k[:-1]) - c_y)]
    return TirolePath(k, s[:, 1] * N, s[:, 2] * N, N, c_y, c_o, R, s, {})


def tirole_saddle_path(params: TiroleParams, horizon: int, k0: float | None = None,
                       tol: float = 1e-8, target: SteadyState | None = None) -> TirolePath:
    """Equilibrium path from (k0, D0/N0) converging to the bubbly steady state."""
    k_b = bubbly_capital(params)
    k0 = k_b if k0 is None else k0
    system = tirole_map(params, k0)
    if target is None:
        bub = saving_per_capita(params, k_b)
        if not bub > 0:
            raise NoBubblyEquilibrium(f"asset demand at k_b is {bub:.3g} <= 0")
        target = analyze_point(system, [k_b, bub, 0.0])
    path = solve_saddle_path(system, [k0, params.D0 / params.N0], target, horizon, tol=tol,
                             bracket=system.free_bracket)
    out = levels_from_states(params, path.states)
    out.diagnostics.update(path.diagnostics)
    return out


def tirole_reduced_form(params: TiroleParams) -> ReducedFormEconomy:
    f = params.production
    k_f, _ = fundamental_capital(params)

    def saving(R):
        k = f.fp_inverse(R)
        return saving_per_capita(params, k) / f.omega(k)

    return ReducedFormEconomy(growth=lambda R: params.G, saving=saving, name="tirole",
                              fundamental_bracket=(f.fp(2.0 * k_f), f.fp(0.5 * k_f)),
                              bubbly_upper=max(10.0, 2.0 * params.G),
                              wealth0=f.omega(bubbly_capital(params)) * params.N0)
