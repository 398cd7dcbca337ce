import dataclasses
import math

import numpy as np
import pytest

from bubbly.diagnostics import certify_elimination, partial_pv_log10, verify_path
from bubbly.errors import PreconditionFailed, ShapeMismatch, UnknownModel
from bubbly.models import leverage as lev
from bubbly.models import samuelson as sam
from bubbly.models import tirole as tir
from bubbly.reduced_form import check_necessity


@pytest.fixture
def closed_path(sam_base):
    return sam.samuelson_closed_form(sam_base, 0.2, 30)


def test_closed_form_passes(sam_base, closed_path):
    rep = verify_path("samuelson", sam_base, closed_path, tol=1e-10)
    assert rep.passed
    assert rep.overall_max < 1e-10
    assert all(np.all(np.asarray(v)[np.isfinite(v)] >= 0) for v in rep.residuals.values())


def test_price_fault_flags_neighbouring_euler(sam_base, closed_path):
    P = closed_path.P.copy()
    P[5] += 1e-3
    rep = verify_path("samuelson", sam_base, sam.path_from_prices(sam_base, P), tol=1e-10)
    assert not rep.passed
    assert rep.residuals["euler"][4] > 1e-4 and rep.residuals["euler"][5] > 1e-4
    assert set(rep.failing_periods("euler")) == {4, 5}


def test_autarky_skips_no_arbitrage(sam_base):
    path = sam.path_from_prices(sam_base, np.zeros(21))
    rep = verify_path("samuelson", sam_base, path, tol=1e-12)
    assert np.all(np.isnan(rep.residuals["no_arbitrage"]))
    assert list(rep.skipped["no_arbitrage"]) == list(range(20))
    assert rep.maxima["euler"] < 1e-12
    assert rep.passed


@pytest.mark.parametrize("field", ["P", "c_y", "c_o"])
def test_fault_injection_every_period(sam_base, closed_path, field):
    tol = 1e-8
    assert verify_path("samuelson", sam_base, closed_path, tol=tol).passed
    base = getattr(closed_path, field)
    for t in range(base.size):
        x = base.copy()
        x[t] += 10 * tol * max(1.0, abs(x[t]))
        bad = dataclasses.replace(closed_path, **{field: x})
        assert not verify_path("samuelson", sam_base, bad, tol=tol).passed, (field, t)


def test_dividend_saddle_path_passes(sam_div):
    path = sam.samuelson_saddle_path(sam_div, 300)
    rep = verify_path("samuelson", sam_div, path, tol=1e-10)
    assert rep.passed, rep.maxima


def test_tirole_saddle_path_passes(tirole_cd):
    path = tir.tirole_saddle_path(tirole_cd, 200)
    rep = verify_path("tirole", tirole_cd, path, tol=1e-10)
    assert rep.passed, rep.maxima


def test_leverage_path_passes(lev_params):
    p = dataclasses.replace(lev_params, D=0.01)
    rep = verify_path("leverage", p, lev.leverage_simulate(p, 1.9, 100), tol=1e-10)
    assert rep.passed, rep.maxima


def test_errors(sam_base, closed_path):
    with pytest.raises(UnknownModel):
        verify_path("kocherlakota", sam_base, closed_path)
    short = dataclasses.replace(closed_path, D=closed_path.D[:-1])
    with pytest.raises(ShapeMismatch):
        verify_path("samuelson", sam_base, short)
    with pytest.raises(ShapeMismatch):
        verify_path("tirole", sam_base, closed_path)


def test_certificate_eliminated():
    c = certify_elimination(0.8, 1.0, 1.2, 0.01)
    assert c.eliminated and c.increasing and c.growth_consistent
    assert c.growth_predicted == pytest.approx(900 * math.log10(1.25), rel=1e-14)
    # exact geometric sum at T = 10
    exact = 0.01 * (1.25 ** 11 - 1) / 0.25
    assert 10 ** c.log10_sums[0] == pytest.approx(exact, rel=1e-12)


def test_certificate_convergent():
    c = certify_elimination(1.3, 1.0, 1.2, 0.01)
    assert not c.eliminated and not c.growth_consistent
    limit = 0.01 / (1 - 1 / 1.3)
    assert all(10 ** s <= limit * (1 + 1e-12) for s in c.log10_sums)
    assert 10 ** c.log10_sums[-1] == pytest.approx(limit, rel=1e-12)


def test_certificate_precondition():
    with pytest.raises(PreconditionFailed):
        certify_elimination(0.8, 1.0, 1.2, 0.0)


def test_partial_sum_no_overflow():
    # (G_d/R)^1000 overflows float64 directly; the log-space sum does not
    v = partial_pv_log10(0.1, 1.0, 1.0, 1000)
    assert v == pytest.approx(1001 - math.log10(9), abs=1e-9)


def test_certificate_matches_necessity_on_random_triples():
    rng = np.random.default_rng(20240611)
    triples = rng.uniform(0.5, 1.5, size=(1000, 3))
    for R, Gd, G in triples:
        c = certify_elimination(R, Gd, G, 0.01)
        assert c.eliminated == check_necessity(R, Gd, G).eliminated
        if c.eliminated:
            assert c.increasing
            # the 1% growth match is asymptotic: it needs the T = 100 sum
            # to be dominated by its last terms
            if (Gd / R) ** 101 > 101:
                assert c.growth_consistent
