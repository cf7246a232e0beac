import math

import numpy as np
import pytest

from jfts_capacity.baselines import (K_FADING_FIG, NAKAGAMI_LOGNORMAL_FIG, BaselineModel,
                                     BaselineParams, baseline_amount_of_fading, baseline_csnr_pdf,
                                     baseline_opra, density_integral)
from jfts_capacity.errors import DomainError

BOTH = [NAKAGAMI_LOGNORMAL_FIG, K_FADING_FIG]


def rayleigh_opra_trapezoid(gamma_bar, n=1_000_000):
    """Rayleigh OPRA from scratch: bisection on the cutoff, trapezoid integrals."""
    u = np.linspace(math.log(1e-9), math.log(gamma_bar * 80), n)
    g = np.exp(u)
    f = np.exp(-g / gamma_bar) / gamma_bar

    def constraint(g0):
        m = g >= g0
        return np.trapezoid(np.where(m, (1 / g0 - 1 / g) * f * g, 0.0), u) - 1

    lo, hi = 1e-3, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if constraint(mid) > 0 else (lo, mid)
    g0 = 0.5 * (lo + hi)
    m = g >= g0
    return np.trapezoid(np.where(m, np.log2(g / g0) * f * g, 0.0), u), g0


def test_params_validation():
    with pytest.raises(DomainError):
        BaselineParams(BaselineModel.NAKAGAMI_LOGNORMAL, nakagami_m=1.0)
    with pytest.raises(DomainError):
        BaselineParams(BaselineModel.K_FADING, k_shape=-1.0)


@pytest.mark.parametrize("bp", BOTH)
def test_normalized(bp):
    total = density_integral(lambda g: baseline_csnr_pdf(bp, g, 10.0), 0.0, math.inf, scale=10.0)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("bp", BOTH)
def test_mean_is_gamma_bar(bp):
    m1 = density_integral(lambda g: baseline_csnr_pdf(bp, g, 10.0), 0.0, math.inf, lambda g: g, 10.0)
    assert m1 == pytest.approx(10.0, rel=1e-8)


def test_lognormal_spread_to_zero_is_rayleigh():
    bp = BaselineParams(BaselineModel.NAKAGAMI_LOGNORMAL, nakagami_m=1.0, sigma_db=1e-9)
    g = np.geomspace(1e-3, 60, 50)
    np.testing.assert_allclose(baseline_csnr_pdf(bp, g, 5.0), np.exp(-g / 5.0) / 5.0, rtol=1e-6)


def test_k_fading_shape_one_closed_form():
    bp = BaselineParams(BaselineModel.K_FADING, k_shape=1.0)
    g = np.geomspace(1e-3, 50, 20)
    from scipy.special import k0
    np.testing.assert_allclose(baseline_csnr_pdf(bp, g, 2.0), k0(2 * np.sqrt(g / 2.0)), rtol=1e-13)


def test_amount_of_fading_values():
    # Reported against 3.45: log-normal mixture lands close, K-fading at k = 0.96 does not.
    af_nln = baseline_amount_of_fading(NAKAGAMI_LOGNORMAL_FIG)
    af_k = baseline_amount_of_fading(K_FADING_FIG)
    s = 3.88 * math.log(10) / 10
    assert af_nln == pytest.approx(2 * math.exp(s * s) - 1, rel=1e-8)
    assert af_k == pytest.approx(1 + 2 / 0.96, rel=1e-8)


def test_rayleigh_opra_oracle():
    bp = BaselineParams(BaselineModel.NAKAGAMI_LOGNORMAL, nakagami_m=1.0, sigma_db=1e-9)
    res = baseline_opra(bp, 10.0)
    value, g0 = rayleigh_opra_trapezoid(10.0)
    assert res.value == pytest.approx(value, abs=1e-4)
    assert res.diagnostics["gamma0"] == pytest.approx(g0, rel=1e-4)


@pytest.mark.parametrize("bp", BOTH)
def test_cutoff_approaches_one(bp):
    g0 = baseline_opra(bp, 100.0).diagnostics["gamma0"]
    assert 0.8 < g0 <= 1.0


@pytest.mark.parametrize("bp", BOTH)
def test_opra_increasing(bp):
    vals = [baseline_opra(bp, 10 ** (db / 10)).value for db in (0, 10, 20)]
    assert vals[0] < vals[1] < vals[2]
