import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crackinv import specfun as sf

mpmath.mp.dps = 40


def mp_j(n, x):
    return float(mpmath.besselj(n, x))


def mp_y(n, x):
    return float(mpmath.bessely(n, x))


def test_trivial_values():
    assert sf.bessel_j(0, 0.0) == 1.0
    assert sf.bessel_j(1, 0.0) == 0.0
    assert sf.bessel_j(5, 0.0) == 0.0


def test_j0_of_one_matches_power_series():
    # independent oracle: sum (-1)^m (x/2)^{2m} / (m!)^2 in exact rationals
    from fractions import Fraction
    total = Fraction(0)
    for m in range(30):
        total += Fraction((-1) ** m, 4 ** m * math.factorial(m) ** 2)
    assert sf.bessel_j(0, 1.0) == pytest.approx(float(total), rel=1e-15)
    assert sf.bessel_j(0, 1.0) == pytest.approx(0.765197686557966551, rel=1e-14)


def test_y_values_at_one():
    assert sf.bessel_y(0, 1.0) == pytest.approx(0.088256964215676957, rel=1e-12)
    assert sf.bessel_y(1, 1.0) == pytest.approx(-0.781212821300288716, rel=1e-12)
    assert sf.bessel_y(-1, 1.0) == pytest.approx(0.781212821300288716, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5, 8, 13, 20, 30])
@pytest.mark.parametrize("x", [1e-3, 0.1, 0.7, 1.0, 2.5, 5.0, 7.9, 8.1, 12.0, 20.0, 29.5, 31.0, 55.0, 100.0])
def test_bessel_j_matches_mpmath(n, x):
    ref = mp_j(n, x)
    got = sf.bessel_j(n, x)
    if abs(ref) > 1e-250:  # skip values deep in the underflow tail
        assert got == pytest.approx(ref, rel=1e-12)
    assert sf.bessel_j(-n, x) == pytest.approx((-1) ** n * got, rel=1e-15, abs=0)


@pytest.mark.parametrize("n", [0, 1, 2, 4, 7, 12, 20])
@pytest.mark.parametrize("x", [1e-6, 1e-3, 0.05, 0.5, 1.0, 3.3, 7.99, 8.01, 15.0, 29.9, 30.1, 60.0, 100.0])
def test_bessel_y_matches_mpmath(n, x):
    ref = mp_y(n, x)
    got = sf.bessel_y(n, x)
    if math.isfinite(ref) and abs(ref) < 1e300:
        assert got == pytest.approx(ref, rel=1e-10)


def test_y_domain_error():
    with pytest.raises(ValueError):
        sf.bessel_y(0, 0.0)
    with pytest.raises(ValueError):
        sf.bessel_y(1, -1.0)
    with pytest.raises(ValueError):
        sf.hankel1(0, 0.0)


def test_hankel_identities():
    h = sf.hankel1(0, 1.0)
    assert h.real == pytest.approx(0.765197686557966551, rel=1e-13)
    assert h.imag == pytest.approx(0.088256964215676957, rel=1e-12)
    for x in (0.3, 1.0, 4.2, 40.0):
        assert sf.hankel1_deriv(0, x) == pytest.approx(-sf.hankel1(1, x), rel=1e-13)
        assert sf.hankel1(-2, x) == pytest.approx(sf.hankel1(2, x), rel=1e-15)


@pytest.mark.parametrize("n,x", [(0, 0.5), (1, 2.0), (3, 7.0), (6, 15.0), (10, 40.0)])
def test_hankel_derivative_matches_mpmath(n, x):
    ref = complex(mpmath.diff(lambda t: mpmath.hankel1(n, t), x))
    assert sf.hankel1_deriv(n, x) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(0, 20), x=st.floats(0.1, 50.0))
def test_wronskian(n, x):
    j = sf.bessel_j_orders(n + 1, x)
    y = sf.bessel_y_orders(n + 1, x)
    w = j[n + 1] * y[n] - j[n] * y[n + 1]
    assert w == pytest.approx(2.0 / (math.pi * x), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 20), x=st.floats(0.5, 50.0))
def test_three_term_recurrence(n, x):
    for orders in (sf.bessel_j_orders(n + 1, x), sf.bessel_y_orders(n + 1, x)):
        lhs = orders[n - 1] + orders[n + 1]
        rhs = 2.0 * n / x * orders[n]
        scale = max(abs(orders[n - 1]), abs(orders[n + 1]), abs(rhs))
        assert abs(lhs - rhs) <= 1e-9 * scale


def test_signed_orders_parity():
    vals = sf.bessel_j_orders(4, 2.0)
    ext = sf.signed_orders(vals, 4)
    for n in range(-4, 5):
        assert ext[n + 4] == pytest.approx(sf.bessel_j(n, 2.0), rel=1e-15)


def test_fundamental_solution():
    val = sf.fundamental_solution(1.0, (0.0, 0.0), (1.0, 0.0))
    assert val == pytest.approx(0.25j * complex(0.765197686557966551, 0.088256964215676957), rel=1e-12)
    # radial: rotating the pair leaves the value unchanged
    rot = sf.fundamental_solution(1.0, (0.3, 0.2), (0.3 + math.cos(1.1), 0.2 + math.sin(1.1)))
    assert rot == pytest.approx(val, rel=1e-13)
    # conjugate equals -(i/4) H0^(2)
    h2 = complex(sf.bessel_j(0, 1.0), -sf.bessel_y(0, 1.0))
    assert val.conjugate() == pytest.approx(-0.25j * h2, rel=1e-14)
    with pytest.raises(ZeroDivisionError):
        sf.fundamental_solution(1.0, (1.0, 1.0), (1.0, 1.0))


def test_point_source_farfield_trivial():
    k = 2.5
    gamma = np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k)
    for ang in (0.0, 1.0, 4.0):
        xh = np.array([np.cos(ang), np.sin(ang)])
        assert sf.point_source_farfield(k, xh, (0.0, 0.0)) == pytest.approx(gamma, rel=1e-15)
        assert abs(sf.point_source_farfield(k, xh, (1.3, -2.0))) == pytest.approx(abs(gamma), rel=1e-14)


@pytest.mark.parametrize("ang", [0.0, 0.9, 2.5, 4.4])
def test_point_source_farfield_asymptotics(ang):
    k = 1.0
    P = np.array([0.7, -0.4])
    xh = np.array([np.cos(ang), np.sin(ang)])
    r = 1e4 * 2 * np.pi / k
    x = r * xh
    near = complex(0.25j * mpmath.hankel1(0, k * float(np.hypot(*(x - P)))))
    scaled = near * np.sqrt(r) * np.exp(-1j * k * r)
    far = sf.point_source_farfield(k, xh, P)
    assert abs(scaled - far) <= 10.0 / r
