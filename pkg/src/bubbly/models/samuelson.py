"""Two-period OLG endowment economy with a (possibly dividend-paying) asset.

Young endowment a G^t, old endowment b G^t, utility log c_y + beta log c_o.
The detrended state is xi = (P_t / G^t, D_0 (G_d/G)^t).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from bubbly import kernels
from bubbly.dynsys import (
    Classification,
    DeterminacyVerdict,
    EquilibriumPath,
    MapSystem,
    SteadyState,
    backward_iterate,
    find_fixed_point,
    solve_saddle_path,
)
from bubbly.errors import (
    InvalidInitialPrice,
    InvalidParameters,
    InverseUndefined,
    NecessityViolated,
    NotConvergent,
    OrderViolation,
)
from bubbly.reduced_form import NecessityVerdict, ReducedFormEconomy, check_necessity


@dataclass(frozen=True)
class SamuelsonParams:
    a: float
    b: float
    beta: float
    G: float
    G_d: float = 1.0
    D0: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "beta", "G"):
            if not getattr(self, name) > 0:
                raise InvalidParameters(f"{name} must be positive")
        if self.D0 < 0:
            raise InvalidParameters("D0 must be nonnegative")
        if self.D0 > 0 and not self.G_d > 0:
            raise InvalidParameters("G_d must be positive when D0 > 0")

    @property
    def has_bubble(self) -> bool:
        return self.beta * self.a > self.b

    @property
    def bubbly_price(self) -> float:
        """Detrended bubbly steady-state price (beta a - b)/(1 + beta)."""
        return (self.beta * self.a - self.b) / (1.0 + self.beta)

    @property
    def fundamental_rate(self) -> float:
        return self.b * self.G / (self.beta * self.a)

    @property
    def q(self) -> float:
        return self.G_d / self.G

    @property
    def price_pole(self) -> float:
        return self.beta * self.a / (1.0 + self.beta)

    def necessity_holds(self) -> bool:
        return self.has_bubble and self.fundamental_rate < self.G_d < self.G


@dataclass
class SamuelsonPath:
    P: np.ndarray
    D: np.ndarray
    c_y: np.ndarray
    c_o: np.ndarray
    R: np.ndarray
    params: SamuelsonParams
    states: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def periods(self) -> int:
        return self.P.size - 1

    @property
    def p(self) -> np.ndarray:
        return self.P / self.params.G ** np.arange(self.P.size)

    def as_equilibrium_path(self) -> EquilibriumPath:
        states = self.states
        if states is None:
            t = np.arange(self.P.size)
            states = np.column_stack([self.p, self.D / self.params.G ** t])
        return EquilibriumPath(states, series={"P": self.P, "D": self.D, "c_y": self.c_y,
                                               "c_o": self.c_o, "R": self.R},
                               diagnostics=dict(self.diagnostics))


def _dividends(params: SamuelsonParams, T: int) -> np.ndarray:
    if params.D0 == 0:
        return np.zeros(T + 1)
    return params.D0 * params.G_d ** np.arange(T + 1)


def path_from_prices(params: SamuelsonParams, P, D=None) -> SamuelsonPath:
    """Consumption and interest rates implied by a price sequence.

    R_t is the no-arbitrage return (P_{t+1} + D_{t+1})/P_t when P_t > 0 and
    the Euler-implied rate otherwise.
    """
    P = np.asarray(P, dtype=float)
    T = P.size - 1
    D = _dividends(params, T) if D is None else np.asarray(D, dtype=float)
    Gt = params.G ** np.arange(T + 1)
    c_y = params.a * Gt - P
    c_o = params.b * Gt + P + D
    R = np.empty(T)
    for t in range(T):
        if P[t] > 0:
            R[t] = (P[t + 1] + D[t + 1]) / P[t]
        else:
            R[t] = c_o[t + 1] / (params.beta * c_y[t])
    return SamuelsonPath(P, D, c_y, c_o, R, params)


def closed_form_prices(params: SamuelsonParams, P0: float, T: int) -> np.ndarray:
    """Asset price P_0..P_T of the pure-bubble economy in closed form."""
    pstar = params.bubbly_price
    if P0 < 0:
        raise InvalidInitialPrice("P0 must be nonnegative")
    if not params.has_bubble:
        if P0 != 0:
            raise InvalidInitialPrice("beta a <= b admits only P0 = 0")
        return np.zeros(T + 1)
    if P0 > pstar:
        raise InvalidInitialPrice(f"P0 = {P0} exceeds the largest admissible price {pstar}")
    if P0 == 0:
        return np.zeros(T + 1)
    t = np.arange(T + 1)
    ratio = params.beta * params.a / params.b
    # G^t / (ratio^t (1/P0 - 1/pstar) + 1/pstar), multiplied through by P0 pstar
    # so tiny P0 does not overflow and P0 = pstar stays exact
    return params.G ** t * P0 * (pstar / (ratio ** t * (pstar - P0) + P0))


def samuelson_closed_form(params: SamuelsonParams, P0: float, T: int) -> SamuelsonPath:
    if params.D0 != 0:
        raise InvalidParameters("closed form applies to the pure-bubble economy (D0 = 0)")
    return path_from_prices(params, closed_form_prices(params, P0, T))


def samuelson_iterate(params: SamuelsonParams, P0: float, T: int) -> SamuelsonPath:
    """Brute-force forward iteration of the price difference equation."""
    P = kernels.price_recursion(float(P0), params.a, params.b, params.beta, params.G,
                                params.G_d, params.D0, int(T))
    return path_from_prices(params, P)


# ---------------------------------------------------------------------------
# dividend-injected autonomous system

def _map(params):
    ba, bp1, b, q = params.beta * params.a, 1.0 + params.beta, params.b, params.q

    def h(x):
        return np.array([b * x[0] / (ba - bp1 * x[0]) - q * x[1], q * x[1]])
    return h


def _jacobian(params):
    ba, bp1, b, q = params.beta * params.a, 1.0 + params.beta, params.b, params.q

    def jac(x):
        d = ba - bp1 * x[0]
        return np.array([[b * ba / (d * d), -q], [0.0, q]])
    return jac


def _inverse(params):
    ba, bp1, b, q = params.beta * params.a, 1.0 + params.beta, params.b, params.q

    def inv(x):
        x2 = x[1] / q
        s = x[0] + q * x2
        if not x[0] > 0 or not s > 0:
            raise InverseUndefined(f"price coordinate must be positive, got {x[0]}")
        return np.array([ba / (b / s + bp1), x2])
    return inv


def samuelson_injected_system(params: SamuelsonParams) -> MapSystem:
    """Two-dimensional map in (detrended price, detrended dividend).

    The dividend coordinate is predetermined; the price is free.
    """
    if not params.necessity_holds():
        warnings.warn(f"G_d = {params.G_d} outside ({params.fundamental_rate}, {params.G}) "
                      "or beta a <= b: fundamental steady state not eliminated",
                      NecessityViolated, stacklevel=2)
    a, b, beta, q = params.a, params.b, params.beta, params.q

    def orbit_kernel(x0, steps):
        return kernels.samuelson_orbit(float(x0[0]), float(x0[1]), a, b, beta, q, int(steps))

    def escape_kernel(x0, steps, target, direction, band, lo, hi):
        return kernels.samuelson_escape(float(x0[0]), float(x0[1]), a, b, beta, q,
                                        float(target[0]), float(target[1]),
                                        float(direction[0]), float(direction[1]),
                                        float(band), float(lo), float(hi), int(steps))

    return MapSystem(2, _map(params), predetermined=(1,), jacobian=_jacobian(params),
                     inverse=_inverse(params), free_bracket=(0.0, params.price_pole),
                     orbit_kernel=orbit_kernel, escape_kernel=escape_kernel,
                     name="samuelson")


def samuelson_steady_states(params: SamuelsonParams, tol: float = 1e-13):
    """(fundamental, bubbly) fixed points by Newton from nearby guesses."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NecessityViolated)
        system = samuelson_injected_system(params)
    fund = find_fixed_point(system, [1e-6 * params.price_pole, 0.0], tol=tol)
    bub = None
    if params.has_bubble:
        bub = find_fixed_point(system, [0.9 * params.bubbly_price + 0.05 * params.price_pole, 0.0],
                               tol=tol)
    return fund, bub


@dataclass
class SamuelsonVerdict:
    """Verdict on equilibria converging to the bubbly steady state.

    ``local`` is the eigenvalue count at the bubbly point.  A locally unique
    saddle path only pins down the equilibrium when paths converging to the
    fundamental point are ruled out, i.e. when ``necessity`` eliminates it.
    Without a bubbly point (beta a <= b) nothing converges to it and the
    classification is NoConvergentPath; ``fundamental`` still reports the
    count at the fundamental point.
    """

    classification: Classification
    local: DeterminacyVerdict | None
    necessity: NecessityVerdict
    reason: str
    fundamental: DeterminacyVerdict | None = None

    def as_dict(self) -> dict:
        return {"classification": self.classification.value,
                "local": self.local.as_dict() if self.local else None,
                "fundamental": self.fundamental.as_dict() if self.fundamental else None,
                "necessity": self.necessity.as_dict(), "reason": self.reason}


def samuelson_determinacy(params: SamuelsonParams, tol: float = 1e-13) -> SamuelsonVerdict:
    fund, bub = samuelson_steady_states(params, tol)
    nec = check_necessity(params.fundamental_rate, params.G_d, params.G)
    if bub is None:
        return SamuelsonVerdict(Classification.NO_CONVERGENT_PATH, None, nec,
                                "beta a <= b: no bubbly steady state", fund.verdict)
    local = bub.verdict
    if local.classification != Classification.LOCALLY_DETERMINATE:
        return SamuelsonVerdict(local.classification, local, nec,
                                "eigenvalue count at the bubbly point", fund.verdict)
    if not nec.eliminated:
        return SamuelsonVerdict(Classification.INDETERMINATE, local, nec,
                                f"fundamental point not eliminated ({nec.violated} fails): "
                                "paths converging to it are also equilibria", fund.verdict)
    return SamuelsonVerdict(Classification.LOCALLY_DETERMINATE, local, nec,
                            "unique saddle path and fundamental point eliminated", fund.verdict)


def samuelson_saddle_path(params: SamuelsonParams, horizon: int, tol: float = 1e-8,
                          target: SteadyState | None = None) -> SamuelsonPath:
    """The unique dividend-injected equilibrium converging to the bubbly state."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NecessityViolated)
        system = samuelson_injected_system(params)
    if target is None:
        target = samuelson_steady_states(params)[1]
    path = solve_saddle_path(system, [params.D0], target, horizon, tol=tol)
    out = levels_from_states(params, path.states)
    out.diagnostics.update(path.diagnostics)
    return out


def levels_from_states(params: SamuelsonParams, states) -> SamuelsonPath:
    states = np.asarray(states, dtype=float)
    Gt = params.G ** np.arange(states.shape[0])
    P = states[:, 0] * Gt
    D = states[:, 1] * Gt
    out = path_from_prices(params, P, D)
    out.states = states
    return out


def shooting_problem(params: SamuelsonParams, target: SteadyState | None = None,
                     steps: int | None = None):
    from bubbly.dynsys import ShootingProblem, default_shooting_steps
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NecessityViolated)
        system = samuelson_injected_system(params)
    if target is None:
        target = samuelson_steady_states(params)[1]
    x0 = np.array([target.point[0], params.D0])
    prob = ShootingProblem(system, target, x0, 1, 0.25 * params.bubbly_price,
                           system.free_bracket)
    prob.steps = steps or default_shooting_steps(abs(prob.unstable_eigenvalue))
    return prob


def shooting_scan(params: SamuelsonParams, n: int = 10_000, target=None):
    """Shooting function on an interior grid of the admissible price bracket."""
    prob = shooting_problem(params, target)
    lo, hi = prob.bracket
    grid = np.linspace(lo, hi, n + 2)[1:-1]
    d = prob.direction
    vals = kernels.samuelson_scan(grid, params.D0, params.a, params.b, params.beta, params.q,
                                  prob.target.point[0], prob.target.point[1], d[0], d[1],
                                  prob.band, lo, hi, prob.steps)
    return grid, vals


def backward_saddle_path(params: SamuelsonParams, horizon: int, extra: int = 200) -> np.ndarray:
    """Saddle path built backwards from the linearised stable manifold.

    Starts ``extra`` periods beyond the horizon where the dividend coordinate
    is negligible and iterates the exact inverse map back to t = 0.
    """
    T = horizon + extra
    q = params.q
    lam_u = params.beta * params.a / params.b
    x2T = params.D0 * q ** T
    # stable eigenvector of the Jacobian at the bubbly point: (q, lam_u - q)
    x1T = params.bubbly_price + q / (lam_u - q) * x2T
    path = backward_iterate(_inverse(params), [x1T, x2T], T)
    states = path.states[:horizon + 1].copy()
    # recompute the dividend coordinate forward so it is exact at t = 0
    states[:, 1] = params.D0 * q ** np.arange(horizon + 1)
    return states


def interest_rates(params: SamuelsonParams, states) -> np.ndarray:
    """Euler-implied R_t = (G/beta)(b + xi1_{t+1} + xi2_{t+1}) / (a - xi1_t)."""
    s = np.asarray(states, dtype=float)
    return (params.G / params.beta) * (params.b + s[1:, 0] + s[1:, 1]) / (params.a - s[:-1, 0])


def samuelson_interest_limit(params: SamuelsonParams, path, window: int = 10,
                             tol: float = 1e-6) -> float:
    """Limit of the Euler-implied interest rate along a convergent path."""
    states = path.states if hasattr(path, "states") and path.states is not None else None
    if states is None:
        if isinstance(path, SamuelsonPath):
            t = np.arange(path.P.size)
            states = np.column_stack([path.p, path.D / params.G ** t])
        else:
            states = np.asarray(path, dtype=float)
    R = interest_rates(params, states)
    if R.size < window + 1:
        raise NotConvergent("path too short to assess convergence")
    tail = R[-window:]
    if not np.all(np.isfinite(tail)) or np.max(tail) - np.min(tail) > tol:
        raise NotConvergent(f"interest rate not settled: tail spread {np.ptp(tail):.3e}")
    return float(R[-1])


def fundamental_candidates(params: SamuelsonParams, initial_prices, horizon: int):
    """Forward orbits started below the saddle price.

    Each orbit is continued past the first negative price so its limit
    and limiting interest rate can be read off.  Returns a list of dicts
    with the states, the limiting rate and the first inadmissible period.
    """
    out = []
    for x1 in initial_prices:
        s = kernels.samuelson_orbit(float(x1), params.D0, params.a, params.b, params.beta,
                                    params.q, int(horizon))
        neg = np.flatnonzero(s[:, 0] <= 0)
        R = interest_rates(params, s)
        out.append({
            "initial_price": float(x1),
            "states": s,
            "terminal_distance": float(np.max(np.abs(s[-1]))),
            "limit_rate": float(R[-1]),
            "first_inadmissible": int(neg[0]) if neg.size else None,
        })
    return out


# ---------------------------------------------------------------------------
# Pareto ranking

@dataclass
class ParetoReport:
    initial_old: float
    generations: np.ndarray
    f_prime_min: float
    f_prime_grid: np.ndarray

    @property
    def all_positive(self) -> bool:
        return self.initial_old > 0 and bool(np.all(self.generations > 0))


def lifetime_utility_gap(params: SamuelsonParams, P_low, P_high) -> np.ndarray:
    """Utility of generation t under P_high minus under P_low, t = 0..T-1.

    Written with log1p of relative consumption changes so tiny differences
    between vanishing prices are not lost to cancellation.
    """
    T = P_low.size - 1
    Gt = params.G ** np.arange(T + 1)
    cy_low = params.a * Gt - P_low
    co_low = params.b * Gt + P_low
    dy = np.log1p(-(P_high - P_low) / cy_low)
    do = np.log1p((P_high - P_low) / co_low)
    return dy[:-1] + params.beta * do[1:]


def pareto_f(params: SamuelsonParams, p):
    b, a = params.beta, params.a
    return (1 + b) * np.log(a - p) - b * np.log(b * a - (1 + b) * p)


def pareto_f_prime(params: SamuelsonParams, p):
    b, a = params.beta, params.a
    return (1 + b) * p / ((a - p) * (b * a - (1 + b) * p))


def utility_gain(params: SamuelsonParams, p_low, p_high, nodes: int = 20) -> np.ndarray:
    """f(p_high) - f(p_low) as the integral of f' over [p_low, p_high].

    Along an equilibrium path a generation's lifetime utility is a constant
    plus f(p_t).  Since f'(0) = 0 the direct difference cancels to nothing
    once prices are small; the quadrature keeps every term positive.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    p_low = np.asarray(p_low, dtype=float)
    d = np.asarray(p_high, dtype=float) - p_low
    pts = p_low[..., None] + d[..., None] * (0.5 * (x + 1.0))
    return d * (pareto_f_prime(params, pts) @ (0.5 * w))


def pareto_compare(params: SamuelsonParams, P0_low: float, P0_high: float, T: int,
                   grid_points: int = 100) -> ParetoReport:
    if not params.has_bubble:
        raise InvalidParameters("Pareto ranking needs beta a > b")
    if not 0 <= P0_low <= P0_high <= params.bubbly_price:
        raise InvalidInitialPrice("need 0 <= P0_low <= P0_high <= (beta a - b)/(1 + beta)")
    lo = closed_form_prices(params, P0_low, T)
    hi = closed_form_prices(params, P0_high, T)
    Gt = params.G ** np.arange(T + 1)
    gens = utility_gain(params, lo[:-1] / Gt[:-1], hi[:-1] / Gt[:-1])
    old = math.log1p((P0_high - P0_low) / (params.b + P0_low))
    pmax = params.price_pole
    grid = np.linspace(0.0, pmax, grid_points + 2)[1:-1]
    fp = pareto_f_prime(params, grid)
    report = ParetoReport(old, gens, float(np.min(fp)), fp)
    if P0_low < P0_high and not report.all_positive:
        bad = int(np.argmin(gens))
        raise OrderViolation(f"utility difference not positive (generation {bad}: {gens[bad]:.3e})")
    return report


# ---------------------------------------------------------------------------
# reduced form

def samuelson_reduced_form(params: SamuelsonParams) -> ReducedFormEconomy:
    G, a, b, beta = params.G, params.a, params.b, params.beta

    def saving(R):
        s = (beta - b * G / (a * R)) / (1.0 + beta)
        return s, s

    return ReducedFormEconomy(
        growth=lambda R: G,
        saving=saving,
        name="samuelson",
        fundamental_bracket=(1e-3 * params.fundamental_rate, 1e3 * params.fundamental_rate),
        bubbly_upper=max(10.0, 2.0 * G),
        wealth0=a,
    )
