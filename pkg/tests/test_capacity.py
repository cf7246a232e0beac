import math

import numpy as np
import pytest

from jfts_capacity.capacity import (CapacityResult, Method, Scheme, cifr, cutoff_residual,
                                    opra_closed, opra_quadrature, ora_quadrature, ora_series,
                                    solve_cutoff, tifr_capacity, tifr_max)
from jfts_capacity.errors import DomainError, NoRootError
from jfts_capacity.model import CsnrDensityForm, JftsParams, b_aggregate, csnr_pdf, outage_probability
from jfts_capacity.specfun import hyp3f3_unit

REF = JftsParams.from_db(5.0, -9.8, 0.1)
DEGRADED = JftsParams.from_db(2.0, -6.0, 0.9)
HIGH_QUALITY = JftsParams.from_db(20.0, 10.0, 0.1)
LN2 = math.log(2.0)


def lin(db):
    return 10.0 ** (db / 10.0)


def bisect_log(f, lo, hi, rtol=1e-14):
    """Plain bisection in log space; independent of the Brent solver."""
    flo = f(lo)
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return math.sqrt(lo * hi)


def trapezoid_log(func, lo, hi, n=1_000_000):
    """Trapezoid rule on a log grid: int f = int f(e^u) e^u du."""
    u = np.linspace(math.log(lo), math.log(hi), n)
    g = np.exp(u)
    return float(np.trapezoid(func(g) * g, u))


# --- cutoff ----------------------------------------------------------------

def test_residual_diverges_at_small_cutoff():
    vals = [cutoff_residual(REF, g, 10.0) for g in (1e-4, 1e-6, 1e-8)]
    assert vals[0] < vals[1] < vals[2]
    assert vals[2] > 1e6


def test_residual_monotone_on_bracket():
    sol = solve_cutoff(REF, 10.0)
    grid = np.geomspace(*sol.bracket, 100)
    vals = np.array([cutoff_residual(REF, g, 10.0) for g in grid])
    assert np.all(np.diff(vals) < 0)


def test_solver_residual_contract_and_bisection():
    sol = solve_cutoff(REF, 10.0)
    assert abs(sol.residual) < 1e-9
    assert abs(cutoff_residual(REF, sol.gamma0, 10.0)) < 1e-9
    g_bis = bisect_log(lambda g: cutoff_residual(REF, g, 10.0), *sol.bracket)
    assert sol.gamma0 == pytest.approx(g_bis, rel=1e-8)
    assert 0 < sol.gamma0 <= sol.bracket[1]


def test_reference_cutoff_pinned():
    assert solve_cutoff(REF, 10.0).gamma0 == pytest.approx(1.6302235206119462, rel=1e-10)


def test_no_root_carries_endpoints():
    with pytest.raises(NoRootError) as info:
        solve_cutoff(HIGH_QUALITY, 100.0)
    diag = info.value.diagnostics
    assert {"residual_lo", "residual_hi", "bracket"} <= set(diag)


@pytest.mark.parametrize("tol", [0.0, 1e-13])
def test_solver_tolerance_floor(tol):
    with pytest.raises(DomainError):
        solve_cutoff(REF, 10.0, tol=tol)


# --- OPRA ------------------------------------------------------------------

def test_opra_closed_at_unit_cutoff():
    b = b_aggregate(REF)
    res = opra_closed(REF, 10.0, gamma0=1.0, gamma_max_mults=())
    assert res.value == pytest.approx(-b * b / (10.0 * LN2) * hyp3f3_unit(-b / 10.0), rel=1e-14)


def test_opra_closed_degraded_increasing():
    vals = [opra_closed(DEGRADED, lin(db), gamma_max_mults=()).value for db in (6, 9, 12)]
    assert vals[0] < vals[1] < vals[2]


def test_opra_closed_gap_diagnostics():
    res = opra_closed(REF, 10.0)
    assert set(res.diagnostics["quadrature_gap"]) == {1e2, 1e3, 1e4}
    assert res.method is Method.CLOSED_FORM and res.gamma_max is None
    assert res.diagnostics["negative"] == (res.value < 0)


def test_opra_quadrature_vanishing_interval():
    g0 = solve_cutoff(REF, 10.0).gamma0
    assert opra_quadrature(REF, 10.0, g0 * (1 + 1e-9), gamma0=g0).value < 1e-15


def test_opra_quadrature_monotone_in_truncation():
    vals = [opra_quadrature(REF, 10.0, m * 10.0).value for m in (1e1, 1e2, 1e3, 1e4)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_opra_quadrature_pinned_and_trapezoid_oracle():
    res = opra_quadrature(REF, 10.0, 1e4)
    g0, b = res.diagnostics["gamma0"], b_aggregate(REF)
    oracle = trapezoid_log(lambda g: np.log(g / g0) * b / g * -np.expm1(-b * g / 10.0), g0, 1e4) / LN2
    assert res.value == pytest.approx(oracle, rel=1e-9)
    assert res.value == pytest.approx(237.16122447374298, rel=1e-10)
    assert res.gamma_max == 1e4 and res.value >= 0


def test_opra_quadrature_rejects_short_range():
    with pytest.raises(DomainError):
        opra_quadrature(REF, 10.0, 0.5, gamma0=1.0)


# --- ORA -------------------------------------------------------------------

def test_ora_integrand_vanishes_at_origin():
    g = 1e-10
    integrand = math.log1p(g) * csnr_pdf(REF, CsnrDensityForm.AGGREGATED, g, 10.0)
    assert integrand == pytest.approx(b_aggregate(REF) ** 2 / 10.0 * g, rel=1e-8)


def test_ora_quadrature_trapezoid_oracle():
    b = b_aggregate(REF)
    res = ora_quadrature(REF, 10.0, 1e4)
    oracle = trapezoid_log(lambda g: np.log1p(g) * b / g * -np.expm1(-b * g / 10.0), 1e-12, 1e4) / LN2
    assert res.value == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("n_terms", [1, 50])
def test_ora_series_pole(n_terms):
    res = ora_series(REF, 10.0, n_terms=n_terms)
    assert res.method is Method.SERIES
    assert math.isnan(res.value)
    assert res.diagnostics["divergent"] and res.diagnostics["pole_index"] == 1
    assert res.diagnostics["quadrature_replacement"] == pytest.approx(
        ora_quadrature(REF, 10.0, 1e4).value, rel=1e-14)


# --- CIFR ------------------------------------------------------------------

def test_cifr_zero_with_log_divergence():
    res = cifr(REF)
    assert res.value == 0.0 and res.scheme is Scheme.CIFR
    probes = res.diagnostics["inverse_moment_probes"]
    slope = res.diagnostics["density_at_origin"] * math.log(100.0)
    # int_eps^1 (1/g) f dg gains about f(0) ln(100) per two decades of eps.
    assert probes[1e-6] - probes[1e-4] == pytest.approx(slope, rel=1e-3)
    assert probes[1e-4] - probes[1e-2] == pytest.approx(slope, rel=5e-2)


# --- TIFR ------------------------------------------------------------------

@pytest.mark.parametrize("g0", [0.05, 0.5, 2.0, 8.0])
def test_tifr_prefactor_is_one_minus_outage(g0):
    res = tifr_capacity(REF, g0, 10.0)
    assert res.diagnostics["prefactor"] == pytest.approx(1 - outage_probability(REF, g0, 10.0),
                                                          abs=1e-12)


def test_tifr_valid_subset_nonempty():
    vals = [tifr_capacity(REF, g, 10.0) for g in np.geomspace(1e-3, 10.0, 200)]
    finite = [r for r in vals if math.isfinite(r.value)]
    assert finite
    assert all(r.diagnostics["invalid"] for r in vals if not math.isfinite(r.value))


def test_tifr_max_dominates_grid_and_opra_cutoff():
    sol, res = tifr_max(REF, 10.0)
    grid = np.geomspace(1e-3, 100.0, 200)
    vals = np.array([tifr_capacity(REF, g, 10.0).value for g in grid])
    assert res.value >= np.nanmax(vals)
    at_opra = tifr_capacity(REF, solve_cutoff(REF, 10.0).gamma0, 10.0).value
    if math.isfinite(at_opra):
        assert res.value >= at_opra
    assert "supremum_unbounded" in res.diagnostics


def test_capacity_result_gamma_max_contract():
    with pytest.raises(ValueError):
        CapacityResult(Scheme.ORA, 1.0, Method.QUADRATURE)
    with pytest.raises(ValueError):
        CapacityResult(Scheme.ORA, 1.0, Method.CLOSED_FORM, 10.0)
