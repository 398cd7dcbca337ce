"""Fixed points, Jacobians, eigenvalue counting and saddle-path construction
for low-dimensional nonlinear maps xi' = h(xi).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from bubbly.errors import (
    InverseUndefined,
    NoConvergence,
    NonFiniteEvaluation,
    NotDeterminate,
    ShootingFailed,
    SingularJacobian,
    SolverError,
)

DEFAULT_MARGIN = 1e-8


class Classification(str, Enum):
    LOCALLY_DETERMINATE = "LocallyDeterminate"
    INDETERMINATE = "Indeterminate"
    NO_CONVERGENT_PATH = "NoConvergentPath"
    NON_HYPERBOLIC = "NonHyperbolic"


@dataclass(frozen=True)
class MapSystem:
    """Autonomous map of fixed dimension.

    ``predetermined`` lists the coordinates fixed by history; the remaining
    coordinates are free (jump) variables.  ``orbit_kernel`` and
    ``escape_kernel`` are optional fast paths with the same semantics as
    :func:`orbit` and the generic shooting escape loop.
    """

    dimension: int
    map: Callable[[np.ndarray], np.ndarray]
    predetermined: tuple[int, ...]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    free_bracket: Optional[tuple[float, float]] = None
    orbit_kernel: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    escape_kernel: Optional[Callable[..., float]] = None
    name: str = ""

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        pred = tuple(sorted(set(int(i) for i in self.predetermined)))
        if any(i < 0 or i >= self.dimension for i in pred):
            raise ValueError(f"predetermined indices {pred} out of range")
        object.__setattr__(self, "predetermined", pred)

    @property
    def predetermined_count(self) -> int:
        return len(self.predetermined)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dimension) if i not in self.predetermined)

    def __call__(self, x) -> np.ndarray:
        y = np.asarray(self.map(np.asarray(x, dtype=float)), dtype=float)
        if y.shape != (self.dimension,):
            raise ValueError(f"map returned shape {y.shape}, expected ({self.dimension},)")
        return y


@dataclass(frozen=True)
class ImplicitSystem:
    """System H(xi, eta) = 0 linking the state to next period's state."""

    dimension: int
    residual: Callable[[np.ndarray, np.ndarray], np.ndarray]
    predetermined: tuple[int, ...]
    solve_next: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    free_bracket: Optional[tuple[float, float]] = None
    name: str = ""

    @property
    def predetermined_count(self) -> int:
        return len(self.predetermined)


@dataclass(frozen=True)
class DeterminacyVerdict:
    stable_count: int
    unstable_count: int
    on_circle_count: int
    predetermined_count: int
    classification: Classification
    margin: float = DEFAULT_MARGIN

    @property
    def dimension(self) -> int:
        return self.stable_count + self.unstable_count + self.on_circle_count

    def as_dict(self) -> dict:
        return {
            "stable_count": self.stable_count,
            "unstable_count": self.unstable_count,
            "on_circle_count": self.on_circle_count,
            "predetermined_count": self.predetermined_count,
            "classification": self.classification.value,
        }


@dataclass(frozen=True)
class SteadyState:
    point: np.ndarray
    residual_norm: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    verdict: Optional[DeterminacyVerdict] = None
    iterations: int = 0


@dataclass
class EquilibriumPath:
    """Sequence of states xi_0..xi_T with derived series and diagnostics."""

    states: np.ndarray
    series: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1


# ---------------------------------------------------------------------------
# linear algebra helpers

def eigenvalues(J) -> np.ndarray:
    """Eigenvalues with closed forms for 1x1, 2x2 and block-triangular 3x3.

    Anything else goes to LAPACK.
    """
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    if n == 1:
        return np.array([complex(J[0, 0])])
    if n == 2:
        return _eig2(J[0, 0], J[0, 1], J[1, 0], J[1, 1])
    if n == 3:
        # trailing 1x1 block
        if J[2, 0] == 0.0 and J[2, 1] == 0.0:
            return np.concatenate([_eig2(J[0, 0], J[0, 1], J[1, 0], J[1, 1]), [complex(J[2, 2])]])
        if J[0, 1] == 0.0 and J[0, 2] == 0.0:
            return np.concatenate([[complex(J[0, 0])], _eig2(J[1, 1], J[1, 2], J[2, 1], J[2, 2])])
        if J[1, 0] == 0.0 and J[2, 0] == 0.0:
            return np.concatenate([[complex(J[0, 0])], _eig2(J[1, 1], J[1, 2], J[2, 1], J[2, 2])])
        if J[0, 2] == 0.0 and J[1, 2] == 0.0:
            return np.concatenate([_eig2(J[0, 0], J[0, 1], J[1, 0], J[1, 1]), [complex(J[2, 2])]])
    return np.linalg.eigvals(J).astype(complex)


def _eig2(a, b, c, d) -> np.ndarray:
    tr = a + d
    det = a * d - b * c
    disc = cmath.sqrt(tr * tr / 4.0 - det)
    half = tr / 2.0
    # avoid cancellation for the smaller root
    if half.real >= 0:
        l1 = half + disc
    else:
        l1 = half - disc
    l2 = det / l1 if l1 != 0 else 0j
    return np.array([complex(l1), complex(l2)])


def jacobian_fd(system, point, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian; ``step`` is scaled by max(1, |x_j|)."""
    fn = system if not isinstance(system, MapSystem) else system.__call__
    x = np.asarray(point, dtype=float)
    f0 = np.asarray(fn(x), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise NonFiniteEvaluation(f"map not finite at {x}")
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fp = np.asarray(fn(xp), dtype=float)
        fm = np.asarray(fn(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteEvaluation(f"map not finite near {x} (coordinate {j})")
        J[:, j] = (fp - fm) / (2.0 * h)
    return J


def system_jacobian(system: MapSystem, point) -> np.ndarray:
    if system.jacobian is not None:
        return np.asarray(system.jacobian(np.asarray(point, dtype=float)), dtype=float)
    return jacobian_fd(system, point)


def implicit_jacobian(system: ImplicitSystem, xi, eta=None, step: float = 1e-6) -> np.ndarray:
    """Dh = -(D_eta H)^{-1} D_xi H by finite differences of the residual."""
    xi = np.asarray(xi, dtype=float)
    eta = xi if eta is None else np.asarray(eta, dtype=float)
    DxH = jacobian_fd(lambda x: system.residual(x, eta), xi, step)
    DyH = jacobian_fd(lambda y: system.residual(xi, y), eta, step)
    try:
        return -np.linalg.solve(DyH, DxH)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian("D_eta H is singular", point=xi) from exc


def as_map(system: ImplicitSystem) -> MapSystem:
    """Explicit map eta = h(xi) from an implicit system."""
    if system.solve_next is not None:
        step = system.solve_next
    else:
        def step(xi):
            sol = optimize.root(lambda eta: system.residual(xi, eta), xi, tol=1e-14)
            if not sol.success:
                raise NoConvergence(f"implicit step failed at {xi}: {sol.message}", point=xi)
            return sol.x
    jac = system.jacobian
    if jac is None:
        def jac(x):
            return implicit_jacobian(system, x, step(x))
    return MapSystem(system.dimension, step, system.predetermined, jacobian=jac,
                     free_bracket=system.free_bracket, name=system.name)


# ---------------------------------------------------------------------------
# determinacy

def classify_determinacy(state, predetermined_count: int,
                         margin: float = DEFAULT_MARGIN) -> DeterminacyVerdict:
    """Count eigenvalues inside/outside/on the unit circle and classify.

    ``state`` may be a SteadyState or a sequence of eigenvalues.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    eig = state.eigenvalues if isinstance(state, SteadyState) else state
    mods = np.abs(np.asarray(eig, dtype=complex))
    stable = int(np.sum(mods < 1.0 - margin))
    unstable = int(np.sum(mods > 1.0 + margin))
    on_circle = int(mods.size - stable - unstable)
    if on_circle:
        cls = Classification.NON_HYPERBOLIC
    elif stable == predetermined_count:
        cls = Classification.LOCALLY_DETERMINATE
    elif stable > predetermined_count:
        cls = Classification.INDETERMINATE
    else:
        cls = Classification.NO_CONVERGENT_PATH
    return DeterminacyVerdict(stable, unstable, on_circle, predetermined_count, cls, margin)


def analyze_point(system: MapSystem, point, margin: float = DEFAULT_MARGIN,
                  residual_norm: Optional[float] = None) -> SteadyState:
    x = np.asarray(point, dtype=float)
    if residual_norm is None:
        residual_norm = float(np.max(np.abs(system(x) - x)))
    J = system_jacobian(system, x)
    eig = eigenvalues(J)
    verdict = classify_determinacy(eig, system.predetermined_count, margin)
    return SteadyState(x, residual_norm, J, eig, verdict)


def find_fixed_point(system: MapSystem, guess, tol: float = 1e-12, max_iter: int = 100,
                     margin: float = DEFAULT_MARGIN) -> SteadyState:
    """Damped Newton iteration on h(x) - x with step-halving backtracking."""
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")
    x = np.asarray(guess, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("guess must be finite")
    eye = np.eye(system.dimension)

    def resid(z):
        r = system(z) - z
        return r, float(np.max(np.abs(r))) if np.all(np.isfinite(r)) else math.inf

    F, norm = resid(x)
    if not math.isfinite(norm):
        raise NonFiniteEvaluation(f"map not finite at guess {x}")
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} iterations "
                                f"(residual {norm:.3e})", point=x)
        it += 1
        J = system_jacobian(system, x) - eye
        singular = False
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            # neutral directions (eigenvalue 1): minimum-norm step, usable when
            # the residual lies in the range of J
            singular = True
            dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian("Newton step undefined", point=x)
        lam = 1.0
        for _ in range(31):
            xn = x + lam * dx
            Fn, nn = resid(xn)
            if nn < norm:
                break
            lam *= 0.5
        else:
            if singular:
                raise SingularJacobian("Newton matrix singular", point=x)
            raise NoConvergence(f"line search failed at residual {norm:.3e}", point=x)
        x, F, norm = xn, Fn, nn
    st = analyze_point(system, x, margin, residual_norm=norm)
    return SteadyState(st.point, st.residual_norm, st.jacobian, st.eigenvalues,
                       st.verdict, iterations=it)


# ---------------------------------------------------------------------------
# paths

def orbit(system: MapSystem, x0, steps: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if system.orbit_kernel is not None:
        return system.orbit_kernel(x0, steps)
    out = np.empty((steps + 1, system.dimension))
    out[0] = x0
    for t in range(steps):
        out[t + 1] = system(out[t])
    return out


def backward_iterate(inverse: Callable[[np.ndarray], np.ndarray], terminal, steps: int,
                     forward: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> EquilibriumPath:
    """Build xi_0..xi_steps ending at ``terminal`` with a one-step inverse map."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    term = np.asarray(terminal, dtype=float)
    out = np.empty((steps + 1, term.size))
    out[steps] = term
    for t in range(steps - 1, -1, -1):
        prev = np.asarray(inverse(out[t + 1]), dtype=float)
        if not np.all(np.isfinite(prev)):
            raise InverseUndefined(f"inverse not finite at step {t}")
        out[t] = prev
    diag = {}
    if forward is not None and steps:
        diag["max_step_residual"] = float(max(
            np.max(np.abs(np.asarray(forward(out[t])) - out[t + 1])) for t in range(steps)))
    return EquilibriumPath(out, diagnostics=diag)


def unstable_direction(state: SteadyState) -> tuple[np.ndarray, complex]:
    """Left eigenvector of the single unstable eigenvalue."""
    w, vl = np.linalg.eig(state.jacobian.T)
    idx = np.flatnonzero(np.abs(w) > 1.0)
    if idx.size != 1:
        raise NotDeterminate(f"expected exactly one unstable eigenvalue, found {idx.size}")
    lam = w[idx[0]]
    if abs(lam.imag) > 1e-12:
        raise NotDeterminate("unstable eigenvalue is complex; 1-D shooting needs a real root")
    vec = np.real(vl[:, idx[0]])
    return vec / np.max(np.abs(vec)), lam


def _escape_py(system, x0, steps, target, direction, band, free, lo, hi):
    x = np.asarray(x0, dtype=float).copy()
    dev = float(direction @ (x - target))
    for _ in range(steps):
        try:
            x = system(x)
        except (ArithmeticError, ValueError, SolverError):
            return math.nan
        # checked before finiteness: maps signal "price too high/low" with +-inf
        if x[free] >= hi:
            return math.inf
        if x[free] <= lo:
            return -math.inf
        if not np.all(np.isfinite(x)):
            return math.nan
        dev = float(direction @ (x - target))
        if dev > band:
            return math.inf
        if dev < -band:
            return -math.inf
    return dev


@dataclass
class ShootingProblem:
    """Signed terminal deviation along the unstable direction as a function
    of the single free initial coordinate."""

    system: MapSystem
    target: SteadyState
    fixed_state: np.ndarray
    steps: int
    band: float
    bracket: tuple[float, float]
    direction: np.ndarray = None
    unstable_eigenvalue: complex = None

    def __post_init__(self):
        free = self.system.free
        if len(free) != 1:
            raise NotDeterminate("shooting needs exactly one free coordinate")
        self.free = free[0]
        if self.direction is None:
            d, lam = unstable_direction(self.target)
            if d[self.free] < 0:
                d = -d
            self.direction, self.unstable_eigenvalue = d, lam

    def state(self, x_free: float) -> np.ndarray:
        s = np.array(self.fixed_state, dtype=float)
        s[self.free] = x_free
        return s

    def __call__(self, x_free: float) -> float:
        lo, hi = self.bracket
        if self.system.escape_kernel is not None:
            return self.system.escape_kernel(self.state(x_free), self.steps, self.target.point,
                                             self.direction, self.band, lo, hi)
        return _escape_py(self.system, self.state(x_free), self.steps, self.target.point,
                          self.direction, self.band, self.free, lo, hi)

    def scan(self, grid) -> np.ndarray:
        return np.array([self(x) for x in grid])

    def solve(self) -> float:
        lo, hi = self.bracket
        width = hi - lo
        a = lo + 1e-12 * width
        b = hi - 1e-12 * width
        fa, fb = self(a), self(b)
        if not (np.sign(fa) * np.sign(fb) < 0):
            raise ShootingFailed(
                f"no sign change of shooting function on [{a:.6g}, {b:.6g}] "
                f"(terminal deviations {fa:.3g}, {fb:.3g})", bracket=(a, b), values=(fa, fb))
        for _ in range(300):
            m = 0.5 * (a + b)
            if m == a or m == b:
                break
            fm = self(m)
            if math.isnan(fm):
                raise ShootingFailed(f"shooting function undefined at {m}", bracket=(a, b),
                                     values=(fa, fb))
            if fm == 0.0:
                return m
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b, fb = m, fm
        return 0.5 * (a + b)


def count_sign_changes(values) -> int:
    s = np.sign(np.asarray(values, dtype=float))
    s = s[(s != 0) & ~np.isnan(s)]
    return int(np.sum(s[1:] != s[:-1]))


def default_shooting_steps(lam_u: float, decades: float = 12.0) -> int:
    return int(min(400, max(10, math.ceil(decades * math.log(10) / math.log(abs(lam_u))))))


def solve_saddle_path(system: MapSystem, initial_predetermined: Sequence[float],
                      target: SteadyState, horizon: int, tol: Optional[float] = 1e-8,
                      bracket: Optional[tuple[float, float]] = None,
                      band: Optional[float] = None,
                      shoot_steps: Optional[int] = None,
                      segment: Optional[int] = None) -> EquilibriumPath:
    """Equilibrium path converging to a locally determinate steady state.

    The free initial coordinate is found by bisection on the sign of the
    deviation along the unstable left eigenvector.  Long horizons are built
    in segments: after ``segment`` forward steps the free coordinate is
    re-shot from the current predetermined coordinates, which keeps
    round-off amplified by the unstable root below ~1e4 ulp.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    verdict = target.verdict or classify_determinacy(target, system.predetermined_count)
    if verdict.classification != Classification.LOCALLY_DETERMINATE:
        raise NotDeterminate(f"target steady state is {verdict.classification.value}")
    pred = np.asarray(initial_predetermined, dtype=float).ravel()
    if pred.size != system.predetermined_count:
        raise ValueError(f"expected {system.predetermined_count} predetermined values")
    x0 = np.array(target.point, dtype=float)
    x0[list(system.predetermined)] = pred

    if not system.free:
        states = orbit(system, x0, horizon)
        diag = {"free_coordinates": 0}
    else:
        bracket = bracket or system.free_bracket
        if bracket is None:
            raise ValueError("a bracket for the free coordinate is required")
        free = system.free[0]
        scale = max(abs(target.point[free]), 1e-3)
        band = band if band is not None else 0.25 * scale
        probe = ShootingProblem(system, target, x0, 1, band, bracket)
        lam_u = abs(probe.unstable_eigenvalue)
        steps = shoot_steps or default_shooting_steps(lam_u)
        seg = segment or max(1, int(4.0 * math.log(10) / math.log(lam_u)))
        states = np.empty((horizon + 1, system.dimension))
        t = 0
        cur = x0
        n_shots = 0
        while t < horizon:
            prob = ShootingProblem(system, target, cur, steps, band, bracket,
                                   direction=probe.direction,
                                   unstable_eigenvalue=probe.unstable_eigenvalue)
            if np.max(np.abs(cur - target.point)) == 0.0:
                x_free = target.point[free]
            else:
                x_free = prob.solve()
            n_shots += 1
            cur = prob.state(x_free)
            n = min(seg, horizon - t)
            piece = orbit(system, cur, n)
            states[t:t + n + 1] = piece
            t += n
            cur = piece[-1].copy()
        diag = {"free_coordinates": 1, "shots": n_shots, "segment": seg,
                "shooting_steps": steps, "band": float(band), "bracket": list(bracket),
                "unstable_eigenvalue": float(lam_u)}
    dev = float(np.max(np.abs(states[-1] - target.point)))
    diag["terminal_deviation"] = dev
    if horizon > 0:
        diag["max_step_residual"] = float(max(
            np.max(np.abs(system(states[i]) - states[i + 1])) for i in range(horizon)))
    if tol is not None and dev > tol:
        raise ShootingFailed(f"terminal deviation {dev:.3e} exceeds tol {tol:.1e}; "
                             "extend the horizon")
    return EquilibriumPath(states, diagnostics=diag)
