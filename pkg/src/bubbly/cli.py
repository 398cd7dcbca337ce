"""Command-line front end: ``bubbly {steady,determinacy,path,sweep,verify}``.

Scenarios are TOML files::

    model = "samuelson"
    horizon = 300
    [params]
    a = 3.0
    ...
    [tolerances]
    verify = 1e-10
    [sweep]
    parameter = "G_d"
    start = 0.7
    stop = 1.3
    step = 0.05

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal

import numpy as np

from bubbly import __version__
from bubbly.diagnostics import certify_elimination, verify_path
from bubbly.dynsys import eigenvalues, jacobian_fd
from bubbly.errors import (
    BubblyError,
    ConfigInvalid,
    InvalidParameters,
    NecessityViolated,
    SolverError,
    UnknownModel,
)
from bubbly.models import kocherlakota as koch
from bubbly.models import leverage as lev
from bubbly.models import samuelson as sam
from bubbly.models import storage as sto
from bubbly.models import tirole as tir
from bubbly.models.primitives import CobbDouglas, production_from_config, utility_from_config
from bubbly.reduced_form import ReducedFormEconomy, check_necessity, solve_bubble

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4

MODELS = ("samuelson", "tirole", "kocherlakota", "leverage", "storage_risk",
          "reduced_form_custom")
RUNS = ("steady", "determinacy", "path", "sweep", "verify")
TOP_KEYS = {"model", "run", "horizon", "params", "tolerances", "sweep", "path", "description"}
TOL_DEFAULTS = {"fixed_point": 1e-12, "path": 1e-8, "verify": 1e-10, "margin": 1e-8}
PARAM_KEYS = {
    "samuelson": {"a", "b", "beta", "G", "G_d", "D0"},
    "tirole": {"production", "utility", "G", "G_d", "D0", "N0"},
    "kocherlakota": {"a", "b", "beta", "gamma", "G"},
    "leverage": {"beta", "pi", "lambda", "delta", "G", "D", "production"},
    "storage_risk": {"beta", "z", "probs"},
    "reduced_form_custom": {"growth", "saving", "fundamental_bracket", "bubbly_upper",
                            "wealth0"},
}
PATH_KEYS = {"samuelson": {"P0"}, "tirole": {"k0"}, "leverage": {"y0"}}


# ---------------------------------------------------------------------------
# configuration

def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path!r}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"config {path!r} is not valid TOML: {exc}") from exc


def validate_config(cfg: dict, run: str | None = None) -> dict:
    """Check keys and types; returns a normalised copy."""
    errors = []
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        errors.append(f"unknown top-level keys: {sorted(unknown)}")
    model = cfg.get("model")
    if model not in MODELS:
        errors.append(f"model: must be one of {list(MODELS)}, got {model!r}")
    run = run or cfg.get("run")
    if run not in RUNS:
        errors.append(f"run: must be one of {list(RUNS)}, got {run!r}")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        errors.append("params: must be a table")
        params = {}
    if model in PARAM_KEYS:
        bad = set(params) - PARAM_KEYS[model]
        if bad:
            errors.append(f"params: unknown keys for {model}: {sorted(bad)}")
    horizon = cfg.get("horizon", 200)
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        errors.append(f"horizon: must be a positive integer, got {horizon!r}")
    tol = dict(TOL_DEFAULTS)
    for k, v in cfg.get("tolerances", {}).items():
        if k not in TOL_DEFAULTS:
            errors.append(f"tolerances: unknown key {k!r}")
        elif not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            errors.append(f"tolerances.{k}: must be a positive number")
        else:
            tol[k] = float(v)
    path_opts = cfg.get("path", {})
    if model in MODELS:
        bad = set(path_opts) - PATH_KEYS.get(model, set())
        if bad:
            errors.append(f"path: unknown keys for {model}: {sorted(bad)}")
    sweep = cfg.get("sweep")
    if run == "sweep":
        if not isinstance(sweep, dict):
            errors.append("sweep: a [sweep] table is required for run = 'sweep'")
        else:
            try:
                sweep = {"parameter": sweep["parameter"], "grid": sweep_grid(sweep)}
            except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
                errors.append(f"sweep: {exc}")
    if errors:
        raise ConfigInvalid(errors)
    return {"model": model, "run": run, "horizon": horizon, "params": params,
            "tolerances": tol, "sweep": sweep, "path": path_opts,
            "description": cfg.get("description", "")}


def sweep_grid(sweep: dict) -> list:
    """Grid from ``grid = [...]`` or ``start``/``stop``/``step`` (decimal arithmetic)."""
    extra = set(sweep) - {"parameter", "grid", "start", "stop", "step"}
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)}")
    if not isinstance(sweep.get("parameter"), str):
        raise ValueError("'parameter' must be a string such as 'G_d' or 'utility.eps'")
    if "grid" in sweep:
        grid = [float(v) for v in sweep["grid"]]
    else:
        start, stop, step = (Decimal(repr(float(sweep[k]))) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ValueError("step must be positive")
        n = int((stop - start) / step + Decimal("1e-9"))
        grid = [float(start + i * step) for i in range(n + 1)]
    if not grid:
        raise ValueError("empty grid")
    return grid


def _float_table(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = v
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out[k] = float(v)
        else:
            raise InvalidParameters(f"parameter {k!r} must be numeric, got {v!r}")
    return out


def build_params(model: str, params: dict):
    """Model parameter object from a config table (validation errors -> ConfigInvalid)."""
    try:
        if model == "samuelson":
            return sam.SamuelsonParams(**_float_table(params))
        if model == "kocherlakota":
            return koch.KocherlakotaParams(**_float_table(params))
        if model == "tirole":
            p = dict(params)
            prod = production_from_config(p.pop("production", {"kind": "cobb_douglas"}))
            util = utility_from_config(p.pop("utility", {"kind": "log"}))
            out = tir.TiroleParams(prod, util, **_float_table(p))
            out.check_primitives()
            return out
        if model == "leverage":
            p = dict(params)
            prod = production_from_config(p.pop("production", {"kind": "cobb_douglas"}))
            p = _float_table(p)
            if "lambda" in p:
                p["lam"] = p.pop("lambda")
            return lev.LeverageParams(production=prod, **p)
        if model == "storage_risk":
            return sto.StorageRiskParams(float(params["beta"]), tuple(params["z"]),
                                         tuple(params["probs"]) if "probs" in params else None)
        if model == "reduced_form_custom":
            return custom_economy(params)
    except (InvalidParameters, TypeError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) else str(exc)
        if isinstance(exc, KeyError):
            msg = f"missing parameter {msg!r}"
        raise ConfigInvalid(f"params: {msg}") from exc
    raise UnknownModel(f"unknown model {model!r}")


def custom_economy(params: dict) -> ReducedFormEconomy:
    """Reduced form from expressions in R, e.g. growth = "0.5*R + 0.3"."""
    import sympy

    R = sympy.Symbol("R", positive=True)

    def compile_expr(text, name):
        if not isinstance(text, str):
            raise InvalidParameters(f"{name} must be an expression string in R")
        try:
            expr = sympy.sympify(text, locals={"R": R})
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise InvalidParameters(f"cannot parse {name} = {text!r}") from exc
        free = expr.free_symbols - {R}
        if free:
            raise InvalidParameters(f"{name} may only depend on R, found {sorted(map(str, free))}")
        return sympy.lambdify(R, expr, modules="math")

    growth = compile_expr(params["growth"], "growth")
    sav = params["saving"]
    if isinstance(sav, list):
        if len(sav) != 2:
            raise InvalidParameters("saving as a list must give [lower, upper] expressions")
        lo, hi = compile_expr(sav[0], "saving[0]"), compile_expr(sav[1], "saving[1]")
        saving = lambda r: (float(lo(r)), float(hi(r)))
    else:
        s = compile_expr(sav, "saving")
        saving = lambda r: float(s(r))
    bracket = params.get("fundamental_bracket")
    if bracket is None or len(bracket) != 2:
        raise InvalidParameters("fundamental_bracket = [lo, hi] is required")
    return ReducedFormEconomy(
        growth=lambda r: float(growth(r)), saving=saving, name="reduced_form_custom",
        fundamental_bracket=(float(bracket[0]), float(bracket[1])),
        bubbly_upper=float(params["bubbly_upper"]) if "bubbly_upper" in params else None,
        wealth0=float(params.get("wealth0", 1.0)))


# ---------------------------------------------------------------------------
# report pieces

def _cplx(z):
    z = complex(z)
    return [z.real, z.imag]


def steady_dict(ss) -> dict:
    if ss is None:
        return None
    return {"point": [float(v) for v in ss.point], "residual_norm": float(ss.residual_norm),
            "eigenvalues": [_cplx(z) for z in ss.eigenvalues],
            "verdict": ss.verdict.as_dict() if ss.verdict else None}


def _quiet(fn, *a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NecessityViolated)
        return fn(*a, **kw)


def _reduced_form(model, params):
    return {"samuelson": sam.samuelson_reduced_form,
            "kocherlakota": koch.kocherlakota_reduced_form,
            "storage_risk": sto.storage_reduced_form,
            "tirole": tir.tirole_reduced_form}[model](params)


def _bubble_dict(econ) -> dict:
    sol = solve_bubble(econ)
    d = sol.as_dict()
    d["low_interest"] = bool(econ.growth(sol.R_f) > sol.R_f)
    d["price_coefficient"] = sol.saving_rate_at_Rb * econ.wealth0
    return d


def run_steady(model, params, cfg) -> dict:
    tol = cfg["tolerances"]
    if model == "samuelson":
        fund, bub = sam.samuelson_steady_states(params, tol=tol["fixed_point"])
        nec = check_necessity(params.fundamental_rate, params.G_d, params.G) \
            if params.G_d > 0 else None
        out = {"fundamental": steady_dict(fund), "bubbly": steady_dict(bub),
               "fundamental_rate": params.fundamental_rate,
               "bubbly_price": params.bubbly_price if params.has_bubble else None,
               "necessity": nec.as_dict() if nec else None}
        if params.has_bubble:
            out["reduced_form"] = _bubble_dict(sam.samuelson_reduced_form(params))
        return out
    if model == "tirole":
        ss = tir.tirole_steady_states(params)
        return {"k_f": ss.k_f, "R_f": ss.R_f, "k_b": ss.k_b, "R_b": ss.R_b,
                "bubble_per_capita": ss.bubble, "low_interest": ss.low_interest,
                "fundamental_roots": [float(k) for k in ss.all_fundamental_roots],
                "fundamental": steady_dict(ss.fundamental), "bubbly": steady_dict(ss.bubbly),
                "necessity": check_necessity(ss.R_f, params.G_d, params.G).as_dict()}
    if model == "leverage":
        f, b = lev.leverage_fundamental(params), lev.leverage_bubbly(params)
        return {"fundamental": f.as_dict(), "bubbly": b.as_dict(),
                "wealth_growth_fundamental": lev.growth_of_wealth(params, f.y, f.R),
                "wealth_growth_bubbly": lev.growth_of_wealth(params, b.y, b.R),
                "necessity": check_necessity(1.0 - params.delta, 1.0, params.G).as_dict()}
    if model in ("kocherlakota", "storage_risk", "reduced_form_custom"):
        econ = params if model == "reduced_form_custom" else _reduced_form(model, params)
        out = {"reduced_form": _bubble_dict(econ)}
        if model == "kocherlakota":
            out["closed_form"] = {"R_f": params.fundamental_rate,
                                  "low_interest": params.low_interest,
                                  "price_coefficient": params.bubbly_price_coefficient}
        if model == "storage_risk":
            Rb = out["reduced_form"]["R_b"]
            out["closed_form"] = {"R_f": params.fundamental_rate,
                                  "bubble_condition": sto.storage_bubble_condition(params),
                                  "beta_Ez_Einvz": params.beta * params.mean_z * params.mean_inv_z}
            out["eta_at_R_b"] = sto.storage_portfolio(params, Rb)
        return out
    raise UnknownModel(model)


def run_determinacy(model, params, cfg) -> dict:
    margin = cfg["tolerances"]["margin"]
    if model == "samuelson":
        fund, bub = sam.samuelson_steady_states(params, tol=cfg["tolerances"]["fixed_point"])
        out = {"fundamental": steady_dict(fund), "bubbly": steady_dict(bub),
               "analytic_eigenvalues_bubbly": [params.beta * params.a / params.b, params.q],
               "analytic_eigenvalues_fundamental": [params.b / (params.beta * params.a),
                                                    params.q],
               "verdict": sam.samuelson_determinacy(params, cfg["tolerances"]["fixed_point"])
                          .as_dict()}
        return out
    if model == "tirole":
        ss = tir.tirole_steady_states(params)
        out = {"k_b": ss.k_b, "bubble_per_capita": ss.bubble, "low_interest": ss.low_interest}
        if ss.bubbly is None:
            out["bubbly"] = None
            out["note"] = "no bubbly steady state: asset demand at k_b is not positive"
        else:
            terms = tir.tirole_jacobian_terms(params)
            out["bubbly"] = steady_dict(ss.bubbly)
            out["jacobian_terms"] = {"p": terms.p, "q": terms.q, "r": terms.r, "s": terms.s,
                                     "c1": terms.c1, "c2": terms.c2, "signs_hold": terms.signs_hold()}
        out.update(_tirole_bounds(params))
        return out
    if model == "leverage":
        b = lev.leverage_bubbly(params)
        ss = lev.leverage_bubbly_steady_state(params)
        eps = params.production.elasticity(b.y)
        bound = lev.leverage_es_bound(params, b.y)
        return {"y_b": b.y, "bubbly": steady_dict(ss),
                "lambda1": lev.leverage_lambda1(params, b.y), "lambda2": 1.0 / params.G,
                "elasticity": eps, "es_bound": bound,
                "locdet_condition": lev.leverage_locdet_condition(params, b.y),
                "determinacy_predicted": bool(eps > bound)}
    raise ConfigInvalid(f"run 'determinacy' is not defined for model {model!r}; "
                        "use 'steady' for reduced-form economies")


def _tirole_bounds(params) -> dict:
    f = params.production
    k = tir.bubbly_capital(params)
    c = tir.young_consumption(params, k, k)
    eps = params.utility.elasticity(c, params.G * (f.omega(k) - c))
    out = {"elasticity": eps}
    try:
        bound = tir.tirole_eis_bound(params, k)
        out.update({"eis_bound": bound, "determinacy_predicted": bool(eps > bound),
                    "suff_condition": tir.tirole_suff_condition(params)})
    except BubblyError as exc:
        out.update({"eis_bound": None, "error": f"{type(exc).__name__}: {exc}"})
    if isinstance(f, CobbDouglas):
        out["cobb_douglas_bound"] = tir.cobb_douglas_bound(f.alpha, f.delta, params.G)
    return out


def _series_dict(**series) -> dict:
    return {k: [float(x) for x in np.asarray(v, dtype=float)] for k, v in series.items()}


def run_path(model, params, cfg) -> dict:
    T = cfg["horizon"]
    tol = cfg["tolerances"]
    opts = cfg["path"]
    if model == "samuelson":
        if params.D0 > 0:
            p = sam.samuelson_saddle_path(params, T, tol=tol["path"])
            kind = "saddle"
        else:
            P0 = float(opts.get("P0", params.bubbly_price if params.has_bubble else 0.0))
            p = sam.samuelson_closed_form(params, P0, T)
            kind = "closed_form"
        rep = verify_path("samuelson", params, p, tol["verify"])
        return {"kind": kind, "series": _series_dict(P=p.P, D=p.D, c_y=p.c_y, c_o=p.c_o, R=p.R),
                "diagnostics": dict(p.diagnostics), "residuals": rep.as_dict()}
    if model == "tirole":
        k0 = float(opts.get("k0", tir.bubbly_capital(params)))
        p = tir.tirole_saddle_path(params, T, k0=k0, tol=tol["path"])
        rep = verify_path("tirole", params, p, tol["verify"])
        return {"kind": "saddle", "series": _series_dict(k=p.k, P=p.P, D=p.D, R=p.R),
                "diagnostics": dict(p.diagnostics), "residuals": rep.as_dict()}
    if model == "leverage":
        y0 = float(opts.get("y0", lev.leverage_bubbly(params).y))
        p = lev.leverage_simulate(params, y0, T)
        rep = verify_path("leverage", params, p, tol["verify"])
        return {"kind": "forward", "series": _series_dict(y=p.y, P=p.P, W=p.W, K_H=p.K_H, R=p.R),
                "admissible_until": p.admissible_until, "diagnostics": dict(p.diagnostics),
                "residuals": rep.as_dict()}
    econ = params if model == "reduced_form_custom" else _reduced_form(model, params)
    sol = solve_bubble(econ)
    t = np.arange(T + 1)
    return {"kind": "balanced_growth", "bubble": sol.as_dict(),
            "series": _series_dict(P=sol.price_path(t, econ.wealth0))}


def _check(name, passed, **values) -> dict:
    return {"name": name, "passed": bool(passed), **values}


def run_verify(model, params, cfg) -> dict:
    tol = cfg["tolerances"]
    T = cfg["horizon"]
    checks = []
    certs = []
    if model == "samuelson":
        if params.has_bubble:
            P0 = 0.5 * params.bubbly_price
            base = sam.SamuelsonParams(params.a, params.b, params.beta, params.G)
            cf = sam.closed_form_prices(base, P0, min(T, 50))
            it = sam.samuelson_iterate(base, P0, min(T, 50)).P
            err = float(np.max(np.abs(cf - it) / np.maximum(np.abs(it), 1e-300)))
            checks.append(_check("closed_form_vs_iteration", err <= tol["verify"], value=err))
            rep = sam.pareto_compare(base, 0.25 * params.bubbly_price, 0.75 * params.bubbly_price,
                                     30)
            checks.append(_check("pareto_ranking", rep.all_positive and rep.f_prime_min > 0,
                                 value=rep.f_prime_min))
        if params.D0 > 0:
            p = sam.samuelson_saddle_path(params, T, tol=tol["path"])
            rep = verify_path("samuelson", params, p, tol["verify"])
            checks.append(_check("saddle_path_residuals", rep.passed, value=rep.overall_max))
            cands = sam.fundamental_candidates(params, [0.5 * p.p[0]], max(T, 400))
            R_lim = cands[0]["limit_rate"]
            cert = certify_elimination(R_lim, params.G_d, params.G, params.D0)
            certs.append(cert.as_dict())
            checks.append(_check("fundamental_limit_rate",
                                 abs(R_lim - params.fundamental_rate) <= 1e-6, value=R_lim))
            checks.append(_check("fundamental_eliminated", cert.eliminated,
                                 value=cert.verdict))
        else:
            p = sam.samuelson_closed_form(params, params.bubbly_price if params.has_bubble
                                          else 0.0, T)
            rep = verify_path("samuelson", params, p, tol["verify"])
            checks.append(_check("path_residuals", rep.passed, value=rep.overall_max))
    elif model == "tirole":
        ss = tir.tirole_steady_states(params)
        if ss.bubbly is None:
            checks.append(_check("bubbly_steady_state_exists", False, value=ss.bubble))
        else:
            terms = tir.tirole_jacobian_terms(params)
            checks.append(_check("jacobian_sign_lemmas", terms.signs_hold(),
                                 value=[terms.p, terms.q, terms.r, terms.s]))
            fd = jacobian_fd(tir.tirole_map(params), ss.bubbly.point)
            err = float(np.max(np.abs(fd - terms.matrix)))
            checks.append(_check("jacobian_analytic_vs_fd", err <= 1e-5, value=err))
            bounds = _tirole_bounds(params)
            checks.append(_check("eis_condition_equivalence",
                                 bounds.get("determinacy_predicted") == bounds.get("suff_condition"),
                                 value=bounds.get("eis_bound")))
            if params.D0 > 0:
                p = tir.tirole_saddle_path(params, T, tol=tol["path"])
                rep = verify_path("tirole", params, p, tol["verify"])
                checks.append(_check("saddle_path_residuals", rep.passed, value=rep.overall_max))
        if params.D0 > 0:
            cert = certify_elimination(ss.R_f, params.G_d, params.G, params.D0)
            certs.append(cert.as_dict())
            checks.append(_check("fundamental_eliminated", cert.eliminated, value=cert.verdict))
    elif model == "leverage":
        f, b = lev.leverage_fundamental(params), lev.leverage_bubbly(params)
        for name, st in (("fundamental", f), ("bubbly", b)):
            g = lev.growth_of_wealth(params, st.y, st.R)
            checks.append(_check(f"wealth_growth_{name}", abs(g - params.G) <= tol["verify"],
                                 value=g))
        ss = lev.leverage_bubbly_steady_state(params)
        fd = eigenvalues(jacobian_fd(lev.leverage_injected_dynamics(params), ss.point))
        lam1 = lev.leverage_lambda1(params, b.y)
        err = float(min(abs(z - lam1) for z in fd))
        checks.append(_check("lambda1_analytic_vs_fd", err <= 1e-6, value=err))
        eps = params.production.elasticity(b.y)
        checks.append(_check("es_condition_equivalence",
                             lev.leverage_locdet_condition(params, b.y)
                             == bool(eps > lev.leverage_es_bound(params, b.y)),
                             value=lev.leverage_es_bound(params, b.y)))
        p = lev.leverage_simulate(params, b.y, T)
        rep = verify_path("leverage", params, p, tol["verify"])
        acct = {k: v for k, v in rep.maxima.items() if k not in ("rate_band", "idle_capital")}
        checks.append(_check("accounting_identities", max(acct.values()) <= tol["verify"],
                             value=max(acct.values())))
        if params.D > 0:
            cert = certify_elimination(1.0 - params.delta, 1.0, params.G, params.D)
            certs.append(cert.as_dict())
            checks.append(_check("fundamental_eliminated", cert.eliminated, value=cert.verdict))
    else:
        econ = params if model == "reduced_form_custom" else _reduced_form(model, params)
        sol = solve_bubble(econ)
        gap = abs(econ.growth(sol.R_b) - sol.R_b)
        checks.append(_check("bubbly_rate_fixed_point", gap <= tol["verify"], value=gap))
        checks.append(_check("bubbly_rate_above_fundamental", sol.R_b > sol.R_f,
                             value=sol.R_b - sol.R_f))
        checks.append(_check("positive_saving_at_R_b", sol.saving_rate_at_Rb > 0,
                             value=sol.saving_rate_at_Rb))
        closed = {"kocherlakota": getattr(params, "fundamental_rate", None),
                  "storage_risk": getattr(params, "fundamental_rate", None)}.get(model)
        if closed is not None:
            err = abs(sol.R_f - closed)
            checks.append(_check("fundamental_rate_closed_form", err <= 1e-9, value=err))
    return {"checks": checks, "certificates": certs,
            "all_passed": all(c["passed"] for c in checks)}


def sweep_row_summary(model, params, cfg) -> dict:
    """Flat per-row record: rates, bounds, verdicts and necessity flag."""
    if model == "samuelson":
        v = sam.samuelson_determinacy(params, tol=cfg["tolerances"]["fixed_point"])
        return {"R_f": params.fundamental_rate,
                "bubbly_price": params.bubbly_price if params.has_bubble else None,
                "local_classification": v.local.classification.value if v.local else None,
                "classification": v.classification.value,
                "eliminated": v.necessity.eliminated}
    if model == "tirole":
        ss = tir.tirole_steady_states(params)
        row = {"k_f": ss.k_f, "R_f": ss.R_f, "k_b": ss.k_b, "bubble_per_capita": ss.bubble,
               "classification": ss.bubbly.verdict.classification.value if ss.bubbly else None,
               "eliminated": check_necessity(ss.R_f, params.G_d, params.G).eliminated}
        row.update({k: v for k, v in _tirole_bounds(params).items()})
        return row
    if model == "leverage":
        f, b = lev.leverage_fundamental(params), lev.leverage_bubbly(params)
        ss = lev.leverage_bubbly_steady_state(params)
        eps = params.production.elasticity(b.y)
        bound = lev.leverage_es_bound(params, b.y)
        return {"y_f": f.y, "y_b": b.y, "lambda1": lev.leverage_lambda1(params, b.y),
                "elasticity": eps, "es_bound": bound, "determinacy_predicted": bool(eps > bound),
                "locdet_condition": lev.leverage_locdet_condition(params, b.y),
                "classification": ss.verdict.classification.value,
                "eliminated": check_necessity(1.0 - params.delta, 1.0, params.G).eliminated}
    econ = params if model == "reduced_form_custom" else _reduced_form(model, params)
    sol = solve_bubble(econ)
    row = {"R_f": sol.R_f, "R_b": sol.R_b, "saving_rate": sol.saving_rate_at_Rb,
           "low_interest": bool(econ.growth(sol.R_f) > sol.R_f)}
    if model == "storage_risk":
        row["bubble_condition"] = sto.storage_bubble_condition(params)
    return row


def _set_param(params: dict, dotted: str, value: float) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in params.items()}
    keys = dotted.split(".")
    node = out
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return out


def run_sweep(cfg: dict, workers: int = 4) -> dict:
    model = cfg["model"]
    name = cfg["sweep"]["parameter"]
    grid = cfg["sweep"]["grid"]

    def row(value):
        rec = {name: value}
        try:
            params = build_params(model, _set_param(cfg["params"], name, value))
            rec.update(_quiet(sweep_row_summary, model, params, cfg))
            rec["error"] = None
        except BubblyError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            rec["error_kind"] = "config" if isinstance(exc, (ConfigInvalid, InvalidParameters)) \
                else "solver"
        return rec

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(row, grid))      # map preserves grid order
    return {"parameter": name, "rows": rows,
            "row_errors": sum(r["error"] is not None for r in rows)}


# ---------------------------------------------------------------------------
# scenario driver

def run_scenario(config: dict, run: str | None = None, tol: float | None = None,
                 horizon: int | None = None) -> tuple[dict, int]:
    """Validate, dispatch and return (report, exit status)."""
    cfg = validate_config(config, run)
    if tol is not None:
        if not tol > 0:
            raise ConfigInvalid("--tol must be positive")
        cfg["tolerances"]["verify"] = float(tol)
    if horizon is not None:
        if horizon < 1:
            raise ConfigInvalid("--horizon must be positive")
        cfg["horizon"] = int(horizon)
    model, run = cfg["model"], cfg["run"]
    report = {"version": __version__,
              "scenario": {"model": model, "run": run, "horizon": cfg["horizon"],
                           "params": cfg["params"], "tolerances": cfg["tolerances"],
                           "description": cfg["description"]}}
    status = EXIT_OK
    if run == "sweep":
        report["sweep"] = run_sweep(cfg)
        kinds = {r.get("error_kind") for r in report["sweep"]["rows"] if r["error"]}
        if "solver" in kinds:
            status = EXIT_SOLVER
        elif "config" in kinds:
            status = EXIT_CONFIG
        return report, status
    params = build_params(model, cfg["params"])
    fn = {"steady": run_steady, "determinacy": run_determinacy, "path": run_path,
          "verify": run_verify}[run]
    report[run] = _quiet(fn, model, params, cfg)
    if run == "verify" and not report[run]["all_passed"]:
        status = EXIT_VERIFY
    if run == "path" and not report[run].get("residuals", {}).get("passed", True):
        status = EXIT_VERIFY
    return report, status


# ---------------------------------------------------------------------------
# serialization

def _num(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == int(x) and abs(x) < 1e17:
        return format(x, ".1f") if x != 0 or math.copysign(1, x) > 0 else "-0.0"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
               for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, complex):
        return to_json([obj.real, obj.imag], indent, _level)
    if hasattr(obj, "value"):
        return _json_str(str(obj.value))
    return _json_str(str(obj))


def _json_str(s: str) -> str:
    import json
    return json.dumps(s)


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, list) and obj and all(isinstance(v, (int, float)) for v in obj):
        out.append((prefix, " ".join(_cell(float(v)) for v in obj)))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, _cell(obj)))


def to_csv(report: dict) -> str:
    """Sweep -> one row per grid point; path -> one row per period; else key,value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "sweep" in report:
        rows = report["sweep"]["rows"]
        cols = []
        for r in rows:
            for k in r:
                if k not in cols:
                    cols.append(k)
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])
    elif "path" in report and "series" in report["path"]:
        series = report["path"]["series"]
        names = list(series)
        n = max(len(v) for v in series.values())
        w.writerow(["t"] + names)
        for t in range(n):
            w.writerow([t] + [_cell(series[k][t]) if t < len(series[k]) else "" for k in names])
    else:
        flat = []
        _flatten("", report, flat)
        w.writerow(["key", "value"])
        w.writerows(flat)
    return buf.getvalue()


PLOT_TEMPLATE = '''"""Plot {what} from {csv}.  Requires matplotlib."""
import csv

import matplotlib.pyplot as plt

with open({csv!r}, newline="") as fh:
    rows = list(csv.DictReader(fh))
cols = [c for c in rows[0] if c not in ({x!r}, "error", "error_kind")]
x = [float(r[{x!r}]) for r in rows]
fig, axes = plt.subplots(len(cols), 1, figsize=(6, 2.2 * len(cols)), sharex=True, squeeze=False)
for ax, c in zip(axes[:, 0], cols):
    y = []
    for r in rows:
        v = r[c]
        y.append(float(v) if v not in ("", "True", "False") else (1.0 if v == "True" else
                                                                   0.0 if v == "False" else None))
    ax.plot(x, [v if v is not None else float("nan") for v in y], marker=".")
    ax.set_ylabel(c)
axes[-1, 0].set_xlabel({x!r})
fig.tight_layout()
fig.savefig({png!r})
'''


def plot_script(report: dict, csv_path: str) -> str:
    if "sweep" in report:
        x, what = report["sweep"]["parameter"], "sweep results"
    else:
        x, what = "t", "equilibrium path"
    png = csv_path.rsplit(".", 1)[0] + ".png"
    return PLOT_TEMPLATE.format(what=what, csv=csv_path, x=x, png=png)


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bubbly", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="run", required=True)
    for name in RUNS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="scenario TOML file")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--tol", type=float, help="residual tolerance for verification")
        sp.add_argument("--horizon", type=int, help="path horizon (overrides the config)")
        sp.add_argument("--plot-script", help="write a matplotlib script reading the CSV output")
        sp.add_argument("--timing", action="store_true",
                        help="include wall-clock timing (makes reports non-reproducible)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        config = load_config(args.config)
        report, status = run_scenario(config, args.run, args.tol, args.horizon)
    except ConfigInvalid as exc:
        for m in exc.messages:
            print(f"config error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidParameters, UnknownModel) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BubblyError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if args.timing:
        report["timing_seconds"] = time.perf_counter() - t0
    text = to_json(report) + "\n" if args.format == "json" else to_csv(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot_script:
        if args.format != "csv" or not args.out:
            print("config error: --plot-script needs --format csv and --out", file=sys.stderr)
            return EXIT_CONFIG
        with open(args.plot_script, "w", encoding="utf-8") as fh:
            fh.write(plot_script(report, args.out))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
