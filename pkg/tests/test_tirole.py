import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubbly.dynsys import Classification, implicit_jacobian, jacobian_fd
from bubbly.errors import FocSolveFailed, InvalidParameters, NoBubblyEquilibrium
from bubbly.models import tirole as tir
from bubbly.models.primitives import CESUtility, CobbDouglas, LogUtility
from bubbly.models.tirole import TiroleParams


def cd_params(alpha=0.25, delta=1.0, beta=0.9, G=1.05, utility=None, G_d=0.8, D0=0.01):
    u = utility or LogUtility(beta=beta)
    return TiroleParams(CobbDouglas(A=1.0, alpha=alpha, delta=delta), u, G=G, G_d=G_d, D0=D0)


def test_log_consumption_numeric_matches_closed_form(tirole_cd):
    for k, kn in [(0.1, 0.12), (0.15, 0.15), (0.3, 0.2)]:
        closed = tir.young_consumption(tirole_cd, k, kn)
        numeric = tir.young_consumption(tirole_cd, k, kn, numeric=True)
        assert closed == pytest.approx(tirole_cd.production.omega(k) / 1.9, rel=1e-14)
        assert numeric == pytest.approx(closed, rel=1e-10)


def test_ces_consumption_numeric_matches_closed_form():
    p = cd_params(utility=CESUtility(beta=0.9, eps=0.6))
    for k, kn in [(0.1, 0.12), (0.3, 0.2)]:
        assert tir.young_consumption(p, k, kn, numeric=True) == pytest.approx(
            tir.young_consumption(p, k, kn), rel=1e-10)


def test_foc_failure():
    with pytest.raises(FocSolveFailed):
        tir.young_consumption_foc(LogUtility(0.9), -1.0, 1.05)


def test_fundamental_capital_closed_form():
    # instance with 10% depreciation: the low-interest condition fails here
    p = cd_params(alpha=1 / 3, delta=0.1)
    ss = tir.tirole_steady_states(p)
    k_cf = tir.fundamental_capital_closed_form(0.9, 1.0, 1 / 3, 1.05)
    assert ss.k_f == pytest.approx(k_cf, rel=1e-12)
    assert ss.k_f == pytest.approx((0.6 / 1.995) ** 1.5, rel=1e-12)
    H = tir.tirole_residual(p)
    xi = np.array([ss.k_f, 0.0, 0.0])
    assert np.max(np.abs(H(xi, xi))) < 1e-12
    assert ss.R_f > p.G and not ss.low_interest
    assert ss.bubble < 0 and ss.bubbly is None


def test_bubbly_capital(tirole_cd):
    ss = tir.tirole_steady_states(tirole_cd)
    assert tirole_cd.production.fp(ss.k_b) == pytest.approx(1.05, rel=1e-14)
    assert ss.k_b < ss.k_f and ss.low_interest and ss.bubble > 0
    H = tir.tirole_residual(tirole_cd)
    xi = np.array([ss.k_b, ss.bubble, 0.0])
    assert np.max(np.abs(H(xi, xi))) < 1e-14


def test_jacobian_analytic_vs_numeric(tirole_cd):
    ss = tir.tirole_steady_states(tirole_cd)
    terms = tir.tirole_jacobian_terms(tirole_cd)
    fd = jacobian_fd(tir.tirole_map(tirole_cd), ss.bubbly.point)
    assert np.allclose(fd, terms.matrix, atol=1e-5)
    ij = implicit_jacobian(tir.tirole_system(tirole_cd), ss.bubbly.point)
    assert np.allclose(ij, terms.matrix, atol=1e-5)
    gen = tir.tirole_jacobian(tirole_cd)(ss.bubbly.point)
    assert np.allclose(gen, terms.matrix, atol=1e-12)


def test_consumption_partials_match_fd():
    p = cd_params(utility=CESUtility(beta=0.9, eps=0.6))
    k, kn, h = 0.12, 0.13, 1e-7
    c, dk, dkn = tir.consumption_partials(p, k, kn)
    fd_k = (tir.young_consumption(p, k + h, kn) - tir.young_consumption(p, k - h, kn)) / (2 * h)
    fd_kn = (tir.young_consumption(p, k, kn + h) - tir.young_consumption(p, k, kn - h)) / (2 * h)
    assert dk == pytest.approx(fd_k, rel=1e-6)
    assert dkn == pytest.approx(fd_kn, rel=1e-6)


def test_theorem_structure_at_full_depreciation(tirole_cd):
    ss = tir.tirole_steady_states(tirole_cd)
    eig = np.sort(ss.bubbly.eigenvalues.real)
    assert np.all(np.abs(ss.bubbly.eigenvalues.imag) < 1e-12)
    assert 0 < eig[0] < 1 and 0 < eig[1] < 1 and eig[2] > 1
    assert ss.bubbly.verdict.classification == Classification.LOCALLY_DETERMINATE
    terms = tir.tirole_jacobian_terms(tirole_cd)
    assert terms.signs_hold()
    bound = tir.tirole_eis_bound(tirole_cd)
    assert bound < 1
    assert bound <= tir.cobb_douglas_bound(0.25, 1.0, 1.05) + 1e-12
    assert tir.tirole_determinacy_predicted(tirole_cd)


@given(st.floats(0.05, 0.3), st.floats(0.6, 0.98), st.floats(1.0, 1.2))
def test_eis_bound_below_one_and_cd_bound(alpha, beta, G):
    p = cd_params(alpha=alpha, beta=beta, G=G)
    if tir.saving_per_capita(p, tir.bubbly_capital(p)) <= 0:
        return
    bound = tir.tirole_eis_bound(p)
    assert bound < 1
    assert bound <= tir.cobb_douglas_bound(alpha, 1.0, G) + 1e-9


def test_eis_equivalence_grid():
    disagreements = 0
    for alpha in (0.1, 0.2):
        for eps in np.linspace(0.2, 2.0, 50):
            if abs(eps - 1.0) < 1e-9:
                continue
            p = cd_params(alpha=alpha, utility=CESUtility(beta=0.9, eps=float(eps)), G_d=0.9)
            if tir.saving_per_capita(p, tir.bubbly_capital(p)) <= 0:
                continue
            disagreements += tir.tirole_determinacy_predicted(p) != tir.tirole_suff_condition(p)
    assert disagreements == 0


def test_ces_bound_crossing():
    lo = cd_params(alpha=0.1, utility=CESUtility(beta=0.9, eps=0.505), G_d=0.9)
    hi = cd_params(alpha=0.1, utility=CESUtility(beta=0.9, eps=0.506), G_d=0.9)
    assert not tir.tirole_determinacy_predicted(lo) and not tir.tirole_suff_condition(lo)
    assert tir.tirole_determinacy_predicted(hi) and tir.tirole_suff_condition(hi)


def test_saddle_path(tirole_cd):
    k_b = tir.bubbly_capital(tirole_cd)
    path = tir.tirole_saddle_path(tirole_cd, 200, k0=0.95 * k_b)
    assert path.k[0] == pytest.approx(0.95 * k_b)
    assert path.diagnostics["terminal_deviation"] < 1e-8
    assert np.all(path.P > 0)
    assert abs(path.k[-1] - k_b) < 1e-8


def test_saddle_path_ces_utility():
    p = cd_params(alpha=0.1, utility=CESUtility(beta=0.9, eps=0.8), G_d=0.9)
    k_b = tir.bubbly_capital(p)
    path = tir.tirole_saddle_path(p, 200, k0=0.98 * k_b)
    assert path.diagnostics["terminal_deviation"] < 1e-8


def test_no_bubble_path():
    p = cd_params(alpha=1 / 3, delta=0.1)
    with pytest.raises(NoBubblyEquilibrium):
        tir.tirole_saddle_path(p, 50)


def test_reduced_form_matches_steady_state(tirole_cd):
    from bubbly.reduced_form import solve_bubble
    ss = tir.tirole_steady_states(tirole_cd)
    sol = solve_bubble(tir.tirole_reduced_form(tirole_cd))
    assert sol.R_f == pytest.approx(ss.R_f, rel=1e-9)
    assert sol.R_b == pytest.approx(1.05, rel=1e-10)


def test_primitive_checks():
    with pytest.raises(InvalidParameters):
        TiroleParams(CobbDouglas(), LogUtility(), G=-1.0)
    with pytest.raises(InvalidParameters):
        CobbDouglas(alpha=1.5)
    cd_params().check_primitives()
