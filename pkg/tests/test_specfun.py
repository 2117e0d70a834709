import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import zeta as scipy_zeta

from igo.specfun import (PHI, PSI, RealPolynomial, build_pk_polynomial, build_qk_polynomial, c_constant,
                         eulerian_numbers, phi_derivative, pk_denominator, polylog_neg, polylog_neg_exp,
                         polylog_neg_series, psi_capital, psi_capital_series, psi_derivative, psi_lower_bound,
                         psi_minimizer, psi_positivity_threshold, qk_denominator, real_roots, zeta_int)


def test_eulerian_numbers_small_rows():
    assert eulerian_numbers(0) == (1,)
    assert eulerian_numbers(3) == (1, 4, 1)
    assert eulerian_numbers(4) == (1, 11, 11, 1)


@pytest.mark.parametrize("n", range(1, 12))
def test_eulerian_row_sums_to_factorial(n):
    assert sum(eulerian_numbers(n)) == math.factorial(n)


# Reference values from mpmath.polylog at 50 digits.
@pytest.mark.parametrize("k, z, expected", [
    (1, 0.3, 0.61224489795918367347),
    (4, 0.9, 1848510.0),
    (7, -0.5, -0.1454046639231824417),
])
def test_polylog_reference_values(k, z, expected):
    assert polylog_neg(k, z) == pytest.approx(expected, rel=1e-13)


def test_polylog_order_zero_is_geometric():
    z = np.array([-0.5, 0.1, 0.7])
    np.testing.assert_allclose(polylog_neg(0, z), z / (1 - z), rtol=1e-15)


@given(st.integers(0, 12), st.floats(0.0, 0.9))
def test_polylog_closed_form_matches_series(k, z):
    closed = polylog_neg(k, z)
    series = polylog_neg_series(k, z)
    assert abs(closed - series) <= 1e-12 * abs(series)


@given(st.integers(0, 12), st.floats(-0.9, 0.0))
def test_polylog_closed_form_matches_alternating_series(k, z):
    # the alternating series is only accurate relative to the sum of |terms|
    closed = polylog_neg(k, z)
    series = polylog_neg_series(k, z)
    assert abs(closed - series) <= 1e-12 * abs(polylog_neg_series(k, abs(z)))


@given(st.integers(0, 12), st.floats(0.05, 60.0))
def test_polylog_exp_argument_form(k, x):
    assert polylog_neg_exp(k, x) == pytest.approx(polylog_neg(k, math.exp(-x)), rel=1e-11)


# Derivatives of 1/(e^x - 1) by mpmath.diff at 50 digits.
@pytest.mark.parametrize("k, x, expected", [
    (10, 8.64, 2.0925465529502670895e-4),
    (3, 0.7, -24.996989258574562564),
])
def test_phi_derivative_reference(k, x, expected):
    assert phi_derivative(k, x) == pytest.approx(expected, rel=1e-12)


def test_phi_value_and_first_derivative():
    x = 1.3
    assert PHI(x) == pytest.approx(1 / math.expm1(x), rel=1e-15)
    assert PHI.derivative(1, x) == pytest.approx(-math.exp(x) / math.expm1(x) ** 2, rel=1e-14)


# (-1)^k psi^(k) by mpmath.diff at 50 digits.
@pytest.mark.parametrize("k, x, expected", [
    (1, 0.5, 4.0802593768933461771),
    (3, 2.0, 0.37508279404227863156),
    (10, 8.64, -2.0874960804219222058e-6),
    (11, 9.5, -1.917786180034160942e-5),
    (6, 12.0, 3.6908768742960964717e-5),
])
def test_psi_capital_reference(k, x, expected):
    assert psi_capital(k, x) == pytest.approx(expected, rel=1e-10)


def test_psi_capital_zero_order_is_psi():
    x = 2.5
    assert psi_capital(0, x) == pytest.approx(x * math.exp(x) / math.expm1(x) ** 2, rel=1e-14)
    assert PSI(x) == pytest.approx(psi_capital(0, x), rel=1e-15)


@given(st.integers(1, 12), st.floats(0.5, 30.0))
def test_psi_closed_form_matches_series(k, x):
    closed = float(psi_capital(k, x))
    series = psi_capital_series(k, x)
    scale = max(abs(series), 1e-14 * math.factorial(k))
    assert abs(closed - series) <= 1e-10 * scale


@given(st.integers(0, 10), st.floats(0.1, 20.0))
def test_psi_derivative_sign_convention(k, x):
    assert psi_derivative(k, x) == pytest.approx((-1) ** k * psi_capital(k, x), rel=1e-15)


def test_psi_derivative_matches_mpmath_diff():
    f = lambda t: t * mpmath.e ** t / (mpmath.e ** t - 1) ** 2
    for k in (1, 2, 5):
        with mpmath.workdps(30):
            ref = float(mpmath.diff(f, mpmath.mpf("1.7"), k))
        assert psi_derivative(k, 1.7) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("k", range(1, 10))
def test_psi_positive_for_small_orders(k):
    xs = np.linspace(0.01, 40.0, 4000)
    assert np.all(psi_capital(k, xs) > 0)


@pytest.mark.parametrize("k", [10, 11, 12])
def test_psi_takes_negative_values_from_order_ten(k):
    x, v = psi_minimizer(k)
    assert v < 0
    assert psi_capital(k, x) == pytest.approx(v, rel=1e-12)


def test_psi10_minimizer_near_reference_point():
    x, v = psi_minimizer(10)
    assert abs(x - 8.64) < 0.05
    assert v <= psi_capital(10, 8.64)


@pytest.mark.parametrize("k", range(1, 15))
def test_psi_lower_bound_holds(k):
    xs = np.linspace(0.01, 60.0, 6000)
    assert np.min(psi_capital(k, xs)) >= psi_lower_bound(k)


@pytest.mark.parametrize("k", range(1, 15))
def test_psi_positive_below_threshold(k):
    xs = np.linspace(1e-3, psi_positivity_threshold(k), 2000)[:-1]
    assert np.all(psi_capital(k, xs) > 0)


@pytest.mark.parametrize("s", range(2, 31))
def test_zeta_matches_scipy(s):
    assert zeta_int(s) == pytest.approx(float(scipy_zeta(s)), rel=1e-15)


def test_zeta_rejects_bad_arguments():
    with pytest.raises(ValueError):
        zeta_int(1)
    with pytest.raises(ValueError):
        zeta_int(2.5)


@pytest.mark.parametrize("m, expected", [
    (2, 12.0),
    (5, 1180.4860397163152572),
    (11, 30111610.625703491898),
    (12, 172039780.02894356006),
    (13, 991000232.7466559982),
])
def test_c_constant_reference(m, expected):
    assert c_constant(m) == pytest.approx(expected, rel=1e-14)


def test_real_polynomial_basics():
    p = RealPolynomial((-2.0, 0.0, 1.0, 0.0))
    assert p.degree == 2
    assert p(3.0) == 7.0
    assert real_roots(p, (-5, 5)) == pytest.approx([-math.sqrt(2), math.sqrt(2)], abs=1e-10)


@pytest.mark.parametrize("k", range(1, 10))
def test_bound_polynomial_degrees(k):
    assert build_pk_polynomial(k).degree == 3 * k + 5
    assert build_qk_polynomial(k).degree == 5 * k + 9


@pytest.mark.parametrize("k", range(1, 10))
def test_bound_polynomial_constant_terms(k):
    assert build_pk_polynomial(k)(0.0) == pytest.approx((4 * math.pi**2) ** (k + 2), rel=1e-12)
    assert build_qk_polynomial(k)(0.0) == pytest.approx((64 * math.pi**4) ** (k + 2), rel=1e-12)


@pytest.mark.parametrize("k", range(1, 10))
def test_bound_polynomials_are_lower_bounds(k):
    xs = np.linspace(0.05, 25.0, 3000)
    exact = psi_capital(k, xs) / math.factorial(k)
    for poly, den in ((build_pk_polynomial(k), pk_denominator), (build_qk_polynomial(k), qk_denominator)):
        bound = poly(xs) / den(k, xs)
        assert np.all(bound <= exact + 1e-12 * np.abs(exact))


def test_p7_root_agrees_with_mpmath():
    p = build_pk_polynomial(7)
    with mpmath.workdps(60):
        mp_roots = mpmath.polyroots([mpmath.mpf(c) for c in reversed(p.coeffs)], maxsteps=400, extraprec=400)
    real = sorted(float(r.real) for r in mp_roots if abs(r.imag) < 1e-20 and r.real > 0)
    ours = [r for r in real_roots(p, (0.0, 60.0))]
    assert ours == pytest.approx(real, abs=1e-8)
    assert ours == pytest.approx([10.365042493], abs=1e-8)
