"""Bessel/Hankel functions of integer order and real argument, plus the
free-space Helmholtz fields used throughout the package.

The routines here are scalar-oriented and self-contained: small arguments
use the ascending series, ``J_n`` at moderate and large arguments uses
Miller's backward recurrence normalised by ``J_0 + 2 sum J_2k = 1``, and
``Y_0``/``Y_1`` come from the log series (small x), a Neumann expansion in
even-order ``J`` (moderate x) or the Hankel asymptotic expansion (large x).
Higher ``Y_n`` follow by forward recurrence, which is stable for ``Y``.

Vectorised kernel assembly elsewhere uses :mod:`scipy.special`; this module
is the reference implementation and the source for all series coefficients.
"""
from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329

#: default extra terms past ``ceil(kR)`` in the disk series
SERIES_PAD = 20

_SMALL_X = 8.0
_LARGE_X = 30.0


def series_order(kR: float, pad: int = SERIES_PAD) -> int:
    """Truncation order of the disk series, ``ceil(kR) + pad``."""
    return int(math.ceil(kR)) + pad


def _check_real(x):
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x!r}")


def _j_series(nmax: int, x: float) -> np.ndarray:
    out = np.empty(nmax + 1)
    h = 0.5 * x
    q = -h * h
    lead = 1.0
    for n in range(nmax + 1):
        if n > 0:
            lead *= h / n
        term = lead
        total = term
        m = 1
        while True:
            term *= q / (m * (m + n))
            total += term
            if abs(term) <= 1e-17 * abs(total) or m > 200:
                break
            m += 1
        out[n] = total
    return out


def _j_miller(nmax: int, x: float) -> np.ndarray:
    start = int(max(nmax, x) + 30 + 10 * x ** (1.0 / 3.0))
    start += start % 2
    vals = np.zeros(start + 2)
    vals[start] = 1e-300
    norm = 0.0
    for m in range(start, 0, -1):
        vals[m - 1] = (2.0 * m / x) * vals[m] - vals[m + 1]
        if abs(vals[m - 1]) > 1e250:
            vals[m - 1:] *= 1e-250
            norm *= 1e-250
        if (m - 1) % 2 == 0 and m - 1 > 0:
            norm += 2.0 * vals[m - 1]
    norm += vals[0]
    return vals[: nmax + 1] / norm


def bessel_j_orders(nmax: int, x: float) -> np.ndarray:
    """``J_0(x), ..., J_nmax(x)`` for real ``x >= 0``."""
    _check_real(x)
    if x < 0:
        raise ValueError("bessel_j_orders expects x >= 0")
    nmax = int(nmax)
    if x == 0.0:
        out = np.zeros(nmax + 1)
        out[0] = 1.0
        return out
    if x < _SMALL_X:
        return _j_series(nmax, x)
    return _j_miller(nmax, x)


def _y01_series(x: float) -> tuple[float, float]:
    h = 0.5 * x
    q = h * h
    lg = math.log(h) + EULER_GAMMA
    j0, j1 = _j_series(1, x)
    # Y0 tail: sum (-1)^(m+1) H_m q^m / (m!)^2
    term = 1.0
    harm = 0.0
    tail0 = 0.0
    m = 1
    while True:
        term *= -q / (m * m)
        harm += 1.0 / m
        piece = -term * harm
        tail0 += piece
        if abs(piece) < 1e-17 * max(abs(tail0), 1e-300) or m > 200:
            break
        m += 1
    y0 = (2.0 / math.pi) * (lg * j0 + tail0)
    # Y1 = -2/(pi x) + (2/pi) ln(x/2) J1 - (1/pi) sum (-1)^m [psi(m+1)+psi(m+2)] h^(2m+1)/(m!(m+1)!)
    term = h
    psi_a = -EULER_GAMMA
    psi_b = 1.0 - EULER_GAMMA
    tail1 = term * (psi_a + psi_b)
    m = 1
    while True:
        term *= -q / (m * (m + 1))
        psi_a += 1.0 / m
        psi_b += 1.0 / (m + 1)
        piece = term * (psi_a + psi_b)
        tail1 += piece
        if abs(piece) < 1e-17 * max(abs(tail1), 1e-300) or m > 200:
            break
        m += 1
    y1 = -2.0 / (math.pi * x) + (2.0 / math.pi) * math.log(h) * j1 - tail1 / math.pi
    return y0, y1


def _y01_neumann(x: float) -> tuple[float, float]:
    kmax = int(x + 40 + 10 * x ** (1.0 / 3.0))
    j = _j_miller(2 * kmax + 2, x)
    lg = math.log(0.5 * x) + EULER_GAMMA
    ks = np.arange(1, kmax + 1)
    sign = np.where(ks % 2 == 0, 1.0, -1.0)
    s0 = np.sum(sign * j[2 * ks] / ks)
    s1 = np.sum(sign * (j[2 * ks - 1] - j[2 * ks + 1]) / ks)
    y0 = (2.0 / math.pi) * (lg * j[0] - 2.0 * s0)
    y1 = (2.0 / math.pi) * (lg * j[1] - j[0] / x + s1)
    return y0, y1


def _hankel_asymptotic(nu: int, x: float) -> tuple[float, float]:
    """(J_nu, Y_nu) from the Hankel expansion; accurate for x >> nu^2."""
    mu = 4.0 * nu * nu
    p = 0.0
    qq = 0.0
    term = 1.0
    k = 0
    while True:
        if k % 2 == 0:
            p += term if (k // 2) % 2 == 0 else -term
        else:
            qq += term if (k // 2) % 2 == 0 else -term
        k += 1
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) < 1e-17 or abs(nxt) > abs(term) or k > 60:
            break
        term = nxt
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = math.sqrt(2.0 / (math.pi * x))
    return amp * (p * math.cos(chi) - qq * math.sin(chi)), amp * (p * math.sin(chi) + qq * math.cos(chi))


def _y01(x: float) -> tuple[float, float]:
    if x < _SMALL_X:
        return _y01_series(x)
    if x <= _LARGE_X:
        return _y01_neumann(x)
    return _hankel_asymptotic(0, x)[1], _hankel_asymptotic(1, x)[1]


def bessel_y_orders(nmax: int, x: float) -> np.ndarray:
    """``Y_0(x), ..., Y_nmax(x)`` for real ``x > 0`` (forward recurrence)."""
    _check_real(x)
    if x <= 0:
        raise ValueError(f"Y_n has a logarithmic singularity at x={x!r}; need x > 0")
    nmax = int(nmax)
    out = np.empty(max(nmax, 1) + 1)
    out[0], out[1] = _y01(x)
    for n in range(1, nmax):
        out[n + 1] = (2.0 * n / x) * out[n] - out[n - 1]
        if not math.isfinite(out[n + 1]):
            out[n + 1:] = -math.inf
            break
    return out[: nmax + 1]


def _parity(n: int) -> float:
    return -1.0 if n % 2 else 1.0


def bessel_j(n: int, x: float) -> float:
    """Bessel function ``J_n(x)`` of integer order, ``x >= 0``."""
    m = abs(int(n))
    val = float(bessel_j_orders(m, x)[m])
    return val * _parity(m) if n < 0 else val


def bessel_y(n: int, x: float) -> float:
    """Bessel function of the second kind ``Y_n(x)``, ``x > 0``."""
    m = abs(int(n))
    val = float(bessel_y_orders(m, x)[m])
    return val * _parity(m) if n < 0 else val


def hankel1_orders(nmax: int, x: float) -> np.ndarray:
    """``H^(1)_0(x), ..., H^(1)_nmax(x)``."""
    if x <= 0:
        raise ValueError(f"Hankel function undefined for x={x!r}; need x > 0")
    return bessel_j_orders(nmax, x) + 1j * bessel_y_orders(nmax, x)


def hankel1(n: int, x: float) -> complex:
    """Hankel function of the first kind ``H^(1)_n(x) = J_n + i Y_n``."""
    return complex(bessel_j(n, x), bessel_y(n, x))


def hankel1_deriv(n: int, x: float) -> complex:
    """``d/dx H^(1)_n(x) = H^(1)_{n-1}(x) - (n/x) H^(1)_n(x)``."""
    return hankel1(n - 1, x) - (n / x) * hankel1(n, x)


def bessel_j_deriv(n: int, x: float) -> float:
    if x == 0.0:
        return 0.5 * n if abs(n) == 1 else 0.0
    return bessel_j(n - 1, x) - (n / x) * bessel_j(n, x)


def signed_orders(values: np.ndarray, nmax: int) -> np.ndarray:
    """Extend ``C_0..C_nmax`` to orders ``-nmax..nmax`` via ``C_{-n} = (-1)^n C_n``."""
    n = np.arange(1, nmax + 1)
    neg = values[1:][::-1] * np.where(n[::-1] % 2, -1.0, 1.0)
    return np.concatenate([neg, values])


def fundamental_solution(k: float, x, y) -> complex:
    """Free-space Helmholtz fundamental solution ``(i/4) H0^(1)(k|x-y|)``."""
    if k <= 0:
        raise ValueError("wave number must be positive")
    r = math.hypot(x[0] - y[0], x[1] - y[1])
    if r == 0.0:
        raise ZeroDivisionError("fundamental solution is singular at x == y")
    return 0.25j * hankel1(0, k * r)


def farfield_constant(k: float) -> complex:
    """``e^{i pi/4} / sqrt(8 pi k)``, the far-field factor of a unit point source."""
    return np.exp(0.25j * np.pi) / np.sqrt(8.0 * np.pi * k)


def point_source_farfield(k: float, xhat, p):
    """Far-field pattern of ``Phi_k(., p)`` in direction(s) ``xhat``.

    ``xhat`` may be a single unit vector or an ``(m, 2)`` array.
    """
    xhat = np.asarray(xhat, dtype=float)
    phase = xhat[..., 0] * p[0] + xhat[..., 1] * p[1]
    return farfield_constant(k) * np.exp(-1j * k * phase)
