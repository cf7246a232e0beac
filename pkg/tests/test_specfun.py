import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jfts_capacity.errors import DomainError, PoleError, RangeError
from jfts_capacity.specfun import (EULER_GAMMA, bessel_i0, bessel_kv, expint_e1, expint_ei,
                                   gamma_at, gauss_hermite, hyp3f3_unit)

mp.mp.dps = 40


# --- independent oracles ---------------------------------------------------

def e1_series(z):
    """E1(z) = -gamma - ln z - sum (-z)^k / (k k!), in high precision."""
    z = mp.mpf(z)
    return -mp.euler - mp.log(z) - mp.nsum(lambda k: (-z) ** k / (k * mp.factorial(k)), [1, mp.inf])


def e1_continued_fraction(z, terms=400):
    """E1(z) = e^-z / (z + 1/(1 + 1/(z + 2/(1 + 2/(z + ...))))), backward evaluated."""
    z = mp.mpf(z)
    tail = mp.mpf(0)
    for k in range(terms, 0, -1):
        tail = k / (1 + k / (z + tail))
    return mp.exp(-z) / (z + tail)


def hyp3f3_direct(z, n=200):
    # Extra digits absorb the cancellation of the alternating series at large |z|.
    with mp.workdps(40 + int(abs(z) / 2.3)):
        return +mp.fsum(mp.mpf(z) ** k / (mp.factorial(k) * (k + 1) ** 3) for k in range(n))


def i0_series(x):
    x = mp.mpf(x)
    return mp.nsum(lambda k: (x / 2) ** (2 * k) / mp.factorial(k) ** 2, [0, mp.inf])


def kv_integral(nu, x):
    return float(mp.quad(lambda t: mp.exp(-x * mp.cosh(t)) * mp.cosh(nu * t), [0, 1, 2, 4, 6, 10]))


def hermite_rule_mp(m):
    """Nodes and weights from mpmath's Hermite polynomial roots."""
    nodes = sorted(mp.polyroots(mp.taylor(lambda x: mp.hermite(m, x), 0, m)[::-1],
                                maxsteps=200, extraprec=400), key=lambda r: mp.re(r))
    out = []
    for r in nodes:
        r = mp.re(r)
        w = 2 ** (m - 1) * mp.factorial(m) * mp.sqrt(mp.pi) / (m * m * mp.hermite(m - 1, r) ** 2)
        out.append((r, w))
    return out


# --- Gauss-Hermite ---------------------------------------------------------

def test_gauss_hermite_order_one():
    rule = gauss_hermite(1)
    assert rule.nodes.tolist() == [0.0]
    assert rule.weights[0] == pytest.approx(math.sqrt(math.pi), rel=1e-15)


def test_gauss_hermite_order_two():
    rule = gauss_hermite(2)
    np.testing.assert_allclose(rule.nodes, [-1 / math.sqrt(2), 1 / math.sqrt(2)], rtol=1e-15)
    np.testing.assert_allclose(rule.weights, [0.8862269254527580] * 2, rtol=1e-15)


def test_gauss_hermite_order_20_matches_high_precision_roots():
    ref = hermite_rule_mp(20)
    rule = gauss_hermite(20)
    np.testing.assert_allclose(rule.nodes, [float(r) for r, _ in ref], rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(rule.weights, [float(w) for _, w in ref], rtol=1e-12)


@pytest.mark.parametrize("order", range(1, 65))
def test_gauss_hermite_moment_identities(order):
    rule = gauss_hermite(order)
    sp = math.sqrt(math.pi)
    assert rule.integrate(lambda x: np.ones_like(x)) == pytest.approx(sp, rel=1e-12)
    if order >= 2:
        assert rule.integrate(lambda x: x ** 2) == pytest.approx(sp / 2, rel=1e-12)
    if order >= 3:
        assert rule.integrate(lambda x: x ** 4) == pytest.approx(3 * sp / 4, rel=1e-12)
    np.testing.assert_array_equal(rule.nodes, -rule.nodes[::-1])
    assert np.all(rule.weights > 0)


def test_gauss_hermite_fourth_moment_order_20_exact_value():
    rule = gauss_hermite(20)
    assert math.fsum(rule.weights * rule.nodes ** 4) == pytest.approx(3 * math.sqrt(math.pi) / 4,
                                                                       rel=1e-14)


@pytest.mark.parametrize("order", [0, -1, 65])
def test_gauss_hermite_rejects_bad_order(order):
    with pytest.raises(DomainError):
        gauss_hermite(order)


def test_gauss_hermite_arrays_are_read_only():
    rule = gauss_hermite(20)
    with pytest.raises(ValueError):
        rule.nodes[0] = 0.0


# --- Bessel, Gamma ---------------------------------------------------------

def test_bessel_i0_values():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(float(i0_series(1)), rel=1e-14)
    assert bessel_i0(1.0) == pytest.approx(1.2660658778, abs=1e-10)
    assert bessel_i0(-3.0) == bessel_i0(3.0)


def test_bessel_i0_guard():
    bessel_i0(700.0)
    with pytest.raises(RangeError):
        bessel_i0(700.5)


@pytest.mark.parametrize("x", np.geomspace(5, 600, 25))
def test_bessel_i0_asymptotic_band(x):
    lower = math.exp(x) / math.sqrt(2 * math.pi * x) * (1 - 1 / (8 * x))
    assert bessel_i0(x) >= 1.0
    assert bessel_i0(x) >= lower * 0.99


def test_bessel_kv_values():
    assert bessel_kv(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-14)
    assert bessel_kv(0.0, 2.0) == pytest.approx(kv_integral(0.0, 2.0), rel=1e-12)
    assert bessel_kv(0.0, 2.0) == pytest.approx(0.1138938727, abs=1e-10)
    assert bessel_kv(1.0, 1.0) == pytest.approx(kv_integral(1.0, 1.0), rel=1e-12)
    assert bessel_kv(1.0, 1.0) == pytest.approx(0.6019072302, abs=1e-10)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_bessel_kv_domain(x):
    with pytest.raises(DomainError):
        bessel_kv(0.5, x)


def test_gamma_values_and_poles():
    assert gamma_at(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_at(5) == 24.0
    for n in (0, -1, -2, -50):
        with pytest.raises(PoleError):
            gamma_at(n)
    assert gamma_at(-2.5) == pytest.approx(float(mp.gamma(-2.5)), rel=1e-14)


# --- exponential integral --------------------------------------------------

def test_ei_reference_values():
    assert expint_ei(-1.0) == pytest.approx(-float(e1_series(1)), rel=1e-14)
    assert expint_ei(-1.0) == pytest.approx(-0.2193839344, abs=1e-10)
    assert expint_ei(-10.0) == pytest.approx(-float(e1_continued_fraction(10)), rel=1e-13)
    assert expint_ei(-10.0) == pytest.approx(-4.15697e-6, rel=1e-5)


def test_ei_small_argument():
    eps = 1e-8
    assert expint_ei(-eps) == pytest.approx(EULER_GAMMA + math.log(eps), rel=1e-7)


def test_ei_pole_and_guard():
    with pytest.raises(PoleError):
        expint_ei(0.0)
    with pytest.raises(DomainError):
        expint_e1(0.0)
    with pytest.raises(RangeError):
        expint_ei(710.0)


@pytest.mark.parametrize("x", np.concatenate([-np.geomspace(1e-6, 50, 60)]))
def test_ei_plus_e1_vanishes(x):
    oracle = e1_series(-x) if -x <= 2 else e1_continued_fraction(-x)
    assert expint_ei(x) + float(oracle) == pytest.approx(0.0, abs=1e-12 * abs(float(oracle)))


@pytest.mark.parametrize("x", np.geomspace(1e-6, 700, 40))
def test_ei_positive_axis(x):
    assert expint_ei(x) == pytest.approx(float(mp.ei(x)), rel=1e-13)


def test_ei_vectorized_matches_scalar():
    xs = -np.geomspace(1e-3, 100, 17)
    np.testing.assert_array_equal(expint_ei(xs), [expint_ei(float(x)) for x in xs])


# --- 3F3(1,1,1;2,2,2;z) ----------------------------------------------------

def test_hyp3f3_reference_values():
    assert hyp3f3_unit(0.0) == 1.0
    assert hyp3f3_unit(-1.0) == pytest.approx(float(hyp3f3_direct(-1)), rel=1e-15)


def test_hyp3f3_derivative_at_zero():
    h = 1e-5
    d = (hyp3f3_unit(h) - hyp3f3_unit(-h)) / (2 * h)
    assert d == pytest.approx(1 / 8, abs=1e-8)


@pytest.mark.parametrize("z", [1e-3, -1e-3, 1e-2, -1e-2])
def test_hyp3f3_small_z_quadratic(z):
    assert abs(hyp3f3_unit(z) - (1 + z / 8)) <= z * z / 50


@pytest.mark.parametrize("z", [-2.0, -2.0000001, -5.0, -30.0, -137.5, -499.0, 3.0, 40.0, 499.0])
def test_hyp3f3_against_high_precision_series(z):
    assert hyp3f3_unit(z) == pytest.approx(float(hyp3f3_direct(z, n=2000)), rel=1e-12)


def test_hyp3f3_continuous_across_method_switch():
    below, above = hyp3f3_unit(-2.0 - 1e-12), hyp3f3_unit(-2.0)
    assert below == pytest.approx(above, rel=1e-12)


def test_hyp3f3_guard():
    with pytest.raises(RangeError):
        hyp3f3_unit(-500.5)
    with pytest.raises(RangeError):
        hyp3f3_unit(501.0)


# --- property-based --------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-6, max_value=600.0))
def test_e1_matches_mpmath(z):
    assert expint_e1(z) == pytest.approx(float(mp.e1(z)), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-500.0, max_value=500.0))
def test_hyp3f3_matches_mpmath(z):
    assert hyp3f3_unit(z) == pytest.approx(float(mp.hyper([1, 1, 1], [2, 2, 2], z)), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-700.0, max_value=700.0))
def test_i0_even_and_positive(x):
    assert bessel_i0(x) == bessel_i0(-x)
    assert bessel_i0(x) >= 1.0
