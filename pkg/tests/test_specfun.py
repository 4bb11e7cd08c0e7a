"""Special functions against frozen high-precision reference values."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralindex import specfun
from spectralindex.logscale import LogScaledValue

# Reference values computed once with mpmath at 40 digits.
K_IM_REF = [
    (0.0, 1.0, 0.42102443824070833),
    (0.5, 0.3, 1.1009281827393465),
    (1.0, 1.0, 0.28942803702599213),
    (5.0, 2.0, -0.00034633788080657143),
    (10.0, 0.5, 6.7717246719100322e-8),
    (20.0, 5.0, -8.2646568034237979e-15),
    (30.0, 1.0, -9.1861276182516767e-22),
    (2.0, 3.0, 0.019156728326977343),
    (50.0, 10.0, -1.1903880935680582e-35),
]

W_IM_REF = [
    (-1.0, 2.0, 1.0, 0.021867579094688781),
    (-0.5, 1.0, 2.0, 0.13421471508619794),
    (0.3, 3.0, 0.5, 0.0071541137603472239),
    (0.0, 1.0, 2.0, 0.23093016220651918),
    (-2.0, 5.0, 4.0, 1.8784479898419144e-5),
    (0.2, 0.5, 10.0, 0.010345899136771551),
    (-0.5, 15.0, 3.0, -9.4367231594083108e-12),
]

P_IM_REF = [
    (0.3, 1.0, 2.0, 0.60857378264091375),
    (0.0, 2.0, 1.5, 0.2584965125489963),
    (0.7, 5.0, 3.0, 0.053818368622232285),
    (0.3, 10.0, 1.2, 0.036920136044395319),
    (0.5, 3.0, 4.0, -0.012533318935245614),
]

BESSEL_REAL_REF = [
    (0.5, 2.0, 2.046236863089055, 0.11993777196806145),
    (1.7, 0.3, 0.025949561772543083, 11.098113534997124),
    (2.5, 8.0, 282.4940504846608, 0.00021135888447704262),
    (3.0, 20.0, 34592416.340919619, 7.1489666920154838e-10),
]

WHITTAKER_REAL_REF = [
    (-0.5, 1.2, 1.0, 1.1876844691594879, 0.7535923505792589),
    (0.3, 0.7, 3.0, 3.5637366915447034, 0.35151262984210948),
    (-1.0, 2.0, 0.5, 0.19620857941854517, 4.2909061105749269),
]


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.parametrize("tau,x,ref", K_IM_REF)
def test_bessel_k_imaginary_order_reference(tau, x, ref):
    assert rel(specfun.bessel_k_im(tau, x), ref) < 1e-9


@pytest.mark.parametrize("alpha,tau,z,ref", W_IM_REF)
def test_whittaker_imaginary_index_reference(alpha, tau, z, ref):
    assert rel(specfun.whittaker_w_im(alpha, tau, z), ref) < 1e-9


@pytest.mark.parametrize("mu,tau,x,ref", P_IM_REF)
def test_conical_legendre_reference(mu, tau, x, ref):
    assert rel(specfun.legendre_p_im(mu, tau, x), ref) < 1e-9


@pytest.mark.parametrize("nu,x,i_ref,k_ref", BESSEL_REAL_REF)
def test_real_order_bessel_reference(nu, x, i_ref, k_ref):
    assert rel(specfun.bessel_i(nu, x), i_ref) < 1e-11
    assert rel(specfun.bessel_k(nu, x), k_ref) < 1e-11


@pytest.mark.parametrize("alpha,sigma,z,m_ref,w_ref", WHITTAKER_REAL_REF)
def test_real_index_whittaker_reference(alpha, sigma, z, m_ref, w_ref):
    assert rel(specfun.whittaker_m(alpha, sigma, z), m_ref) < 1e-10
    assert rel(specfun.whittaker_w(alpha, sigma, z), w_ref) < 1e-10


def test_real_degree_legendre_reference():
    assert rel(specfun.legendre_p_real(0.3, 0.9, 2.0), 1.1232410092508971) < 1e-10
    # P_{1}(x) = x for order zero
    assert rel(specfun.legendre_p_real(0.0, 1.5, 1.5), 1.5) < 1e-10


def test_bessel_i_zero_order_series():
    terms = sum(0.25 ** k / math.factorial(k) ** 2 for k in range(30))
    assert rel(specfun.bessel_i(0.0, 1.0), terms) < 1e-14


def test_bessel_k_im_evenness_in_index():
    direct = specfun.bessel_k_im(2.0, 3.0)
    assert rel(specfun._bessel_k_im_signed(-2.0, 3.0), direct) < 1e-10
    assert rel(specfun._bessel_k_im_signed(2.0, 3.0), direct) < 1e-10


def test_bessel_k_im_large_argument_asymptotic():
    approx = math.sqrt(math.pi / 100.0) * math.exp(-50.0)
    assert abs(specfun.bessel_k_im(1.0, 50.0) / approx - 1.0) < 0.02


def test_bessel_k_im_scaled_consistency():
    sc = specfun.bessel_k_im_scaled(5.0, 2.0)
    assert isinstance(sc, LogScaledValue)
    assert rel(sc.sign * math.exp(sc.log_mag - 2.5 * math.pi), specfun.bessel_k_im(5.0, 2.0)) < 1e-10
    zero = specfun.bessel_k_im_scaled(0.0, 1.0)
    assert zero.sign == 1 and abs(zero.log_mag - math.log(0.42102443824070833)) < 1e-12


def test_bessel_k_im_scaled_stays_representable():
    sc = specfun.bessel_k_im_scaled(100.0, 1.0)
    assert math.isfinite(sc.log_mag)


def test_bessel_k_im_rejects_nonpositive_argument():
    with pytest.raises(ValueError):
        specfun.bessel_k_im(1.0, 0.0)
    with pytest.raises(ValueError):
        specfun.bessel_k_im(1.0, -2.0)


def test_bessel_k_im_warns_for_tiny_argument_and_huge_index():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        specfun.bessel_k_im(400.0, 1e-4)
    assert any(issubclass(w.category, specfun.AccuracyWarning) for w in caught)


def test_bessel_i_small_argument():
    ratio = specfun.bessel_i(2.0, 0.01) / (0.01 ** 2 / (2 ** 2 * math.gamma(3.0)))
    assert abs(ratio - 1.0) < 1e-4


def test_bessel_wronskian_half_order():
    h = 1e-5
    nu, x = 0.5, 2.0
    di = (specfun.bessel_i(nu, x + h) - specfun.bessel_i(nu, x - h)) / (2 * h)
    dk = (specfun.bessel_k(nu, x + h) - specfun.bessel_k(nu, x - h)) / (2 * h)
    w = specfun.bessel_k(nu, x) * di - dk * specfun.bessel_i(nu, x)
    assert abs(w - 0.5) < 1e-9


@pytest.mark.parametrize("tau", [0.0, 1.0, 5.0])
def test_gamma_abs2_reflection(tau):
    assert rel(specfun.gamma_abs2(0.5, tau), math.pi / math.cosh(math.pi * tau)) < 1e-12


def test_gamma_abs2_simple_values():
    assert abs(specfun.gamma_abs2(1.0, 0.0) - 1.0) < 1e-14
    assert rel(specfun.gamma_abs2(1.5, 1.0), 1.25 * math.pi / math.cosh(math.pi)) < 1e-12


def test_gamma_abs2_rejects_nonpositive_a():
    with pytest.raises(ValueError):
        specfun.gamma_abs2(0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.05, 30.0), tau=st.floats(0.0, 80.0))
def test_gamma_abs2_recurrence(a, tau):
    lhs = specfun.log_gamma_abs2(a + 1.0, tau)
    rhs = math.log(a * a + tau * tau) + specfun.log_gamma_abs2(a, tau)
    assert abs(lhs - rhs) < 1e-11 * max(1.0, abs(lhs))


@settings(max_examples=40, deadline=None)
@given(tau=st.floats(0.0, 40.0), x=st.floats(0.05, 30.0))
def test_whittaker_reduces_to_bessel(tau, x):
    lhs = specfun.whittaker_w_im(0.0, tau, 2.0 * x)
    rhs = math.sqrt(2.0 * x / math.pi) * specfun.bessel_k_im(tau, x)
    scale = math.sqrt(2.0 * x / math.pi) * math.exp(
        specfun.bessel_k_im_scaled(tau, x).log_mag - 0.5 * math.pi * tau)
    assert abs(lhs - rhs) <= 1e-8 * scale + 1e-300


def test_whittaker_matches_naive_quadrature():
    assert rel(specfun.whittaker_w_im(-1.0, 2.0, 1.0), specfun._whittaker_w_im_naive(-1.0, 2.0, 1.0)) < 1e-8


def test_whittaker_large_argument_asymptotic():
    # at x = 40 the first correction (-(alpha - 1/2)^2 / x) is still 5.6 percent
    ratio = specfun.whittaker_w_im(-1.0, 0.0, 40.0) / (40.0 ** -1.0 * math.exp(-20.0))
    assert rel(ratio, 0.94774537542901718) < 1e-10
    x = 200.0
    ratio = specfun.whittaker_w_im(-1.0, 0.0, x) / (x ** -1.0 * math.exp(-x / 2))
    assert abs(ratio - 1.0) < 0.03


def test_whittaker_rejects_alpha_at_half():
    with pytest.raises(ValueError):
        specfun.whittaker_w_im(0.5, 1.0, 1.0)


def test_legendre_half_order_elementary():
    xi = 1.0
    ref = math.sqrt(2.0 / (math.pi * math.sinh(xi))) * math.sin(xi)
    assert rel(specfun.legendre_p_im(0.5, 1.0, math.cosh(xi)), ref) < 1e-9


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0.0, 0.95), tau=st.floats(0.0, 6.0), xi=st.floats(0.05, 5.0))
def test_legendre_matches_cosine_integral(mu, tau, xi):
    x = math.cosh(xi)
    a = specfun.legendre_p_im(mu, tau, x)
    b = specfun._legendre_p_im_cosine(mu, tau, x)
    # the oracle divides by |Gamma|^2 ~ exp(-pi tau); its error grows accordingly
    env = specfun.legendre_p_im(mu, 0.0, x)
    assert abs(a - b) < 1e-11 * math.exp(math.pi * tau) * env


def test_legendre_near_one():
    mu, x = 0.3, 1.0 + 1e-6
    ref = 2 ** (-mu / 2) * (x - 1) ** (mu / 2) / math.gamma(1 + mu)
    assert abs(specfun.legendre_p_im(mu, 1.0, x) / ref - 1.0) < 1e-3
    assert abs(specfun.legendre_p_im(0.0, 0.0, 1.0 + 1e-8) - 1.0) < 1e-4


def test_legendre_rejects_argument_at_one():
    with pytest.raises(ValueError):
        specfun.legendre_p_im(0.3, 1.0, 1.0)


def test_vectorized_evaluation_matches_scalar():
    taus = np.array([0.5, 2.0, 7.0])
    vec = specfun.bessel_k_im(taus, 1.3)
    assert vec.shape == (3,)
    for t, v in zip(taus, vec):
        assert rel(v, specfun.bessel_k_im(float(t), 1.3)) < 1e-13
