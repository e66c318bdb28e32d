import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crackinv.forward import FarFieldPattern, PlaneWave, aperture_angles, crack_farfield, full_circle
from crackinv.geometry import PiecewiseLinearCrack
from crackinv.indicators import (SENTINEL, IndicatorGrid, RegularizationParams, circle_centers,
                                 contrast_crack, contrast_disk, contrast_point_source,
                                 contrast_point_source_grid, default_threshold, disk_test_eigensystem,
                                 factorization_indicator, impedance_disk, indicator_curve, is_sentinel,
                                 misfit, picard_value, radius_from_curve, radius_scan,
                                 shifted_crack_patterns, support_accumulate, support_count_at)
from crackinv.scatterers import DiskScatterer, disk_eigensystem, disk_pattern
from crackinv.specfun import point_source_farfield, series_order

K = 2.0
ANG = full_circle(64)


def ps_pattern(P, k=K, angles=ANG, tau=1.0):
    a = np.asarray(angles)
    return FarFieldPattern(a, tau * point_source_farfield(k, np.column_stack([np.cos(a), np.sin(a)]),
                                                          np.asarray(P, float)), k)


def test_misfit_trivial():
    U = ps_pattern((0.0, 0.0))
    assert misfit(U, U) == 0.0
    gamma2 = 1.0 / (8 * np.pi * K)
    assert misfit(U, np.zeros(64)) == pytest.approx(2 * np.pi * gamma2, rel=1e-14)
    with pytest.raises(ValueError):
        misfit(U, np.zeros(3))


def test_point_source_contrast_peaks_at_source():
    P = (0.5, -1.0)
    U = ps_pattern(P, tau=2.0)
    assert is_sentinel(contrast_point_source(U, P, tau=2.0))
    assert contrast_point_source(U, (0.6, -1.0), tau=2.0) < SENTINEL
    xs = np.linspace(-2, 2, 9)
    pts = np.array([(x, y) for y in xs for x in xs])
    grid = contrast_point_source_grid(U, pts, tau=2.0)
    assert np.allclose(pts[grid.argmax()], (0.5, -1.0))
    with pytest.raises(ValueError):
        contrast_point_source(U, P, tau=0)


@settings(max_examples=40, deadline=None)
@given(c=st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_indicators_homogeneous_of_degree_minus_two(c):
    U = ps_pattern((0.3, 0.2))
    V = ps_pattern((1.0, 1.0))
    Uc = U.with_values(c * U.values)
    base = 1.0 / misfit(U, V)
    scaled = 1.0 / misfit(Uc, c * V.values)
    assert scaled == pytest.approx(base / abs(c) ** 2, rel=1e-10)
    eig = disk_eigensystem_fixture()
    for alpha in (None, 1e-8, 1e-2):
        assert factorization_indicator(Uc, eig, alpha) == pytest.approx(
            factorization_indicator(U, eig, alpha) / abs(c) ** 2, rel=1e-10)


def disk_eigensystem_fixture():
    return disk_test_eigensystem(impedance_disk((0.0, 0.0), 1.0, K), ps_pattern((0, 0)))


def test_factorization_indicator_exact_on_eigenvector():
    eig = disk_eigensystem_fixture()
    for n in (0, 3):
        U = FarFieldPattern(ANG, eig.vectors[:, n], K)
        assert factorization_indicator(U, eig) == pytest.approx(eig.lambdas[n], rel=1e-10)
        alpha = 0.1
        lam = eig.lambdas[n]
        assert factorization_indicator(U, eig, alpha) == pytest.approx((alpha + lam) ** 2 / lam, rel=1e-10)


def test_regularized_tends_to_raw_as_alpha_vanishes():
    eig = disk_eigensystem_fixture()
    U = ps_pattern((0.2, 0.1))
    raw = factorization_indicator(U, eig)
    vals = [factorization_indicator(U, eig, a) for a in (1e-4, 1e-7, 1e-10)]
    assert abs(vals[-1] - raw) < abs(vals[0] - raw)
    assert vals[-1] == pytest.approx(raw, rel=1e-6)


def test_picard_value_sentinels():
    assert picard_value([1.0, 2.0], [0.0, 0.0]) == SENTINEL
    assert picard_value([0.0], [1.0]) == 0.0
    assert picard_value([1.0, 1e-20], [1.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        picard_value([1.0], [1.0], alpha=0.0)
    with pytest.raises(ValueError):
        RegularizationParams(alpha=-1)


def test_factorization_invariant_under_global_phase():
    eig = disk_eigensystem_fixture()
    U = ps_pattern((0.4, 0.0))
    V = U.with_values(np.exp(1.3j) * U.values)
    assert factorization_indicator(V, eig, 1e-8) == pytest.approx(factorization_indicator(U, eig, 1e-8), rel=1e-12)


def test_indicator_curve_fast_path_matches_direct():
    U = ps_pattern((0.5, 0.5))
    center = (0.0, 0.0)
    radii = np.array([0.3, 0.6, 0.9, 1.2])
    fast = indicator_curve(U, center, radii)
    direct = []
    for r in radii:
        disk = impedance_disk(center, r, K)
        eig = disk_eigensystem(disk, U.angles, K, U.weights, min(series_order(K * radii[-1]), 31))
        direct.append(factorization_indicator(U, eig, 1e-8))
    assert np.allclose(fast, direct, rtol=1e-9)


def test_radius_scan_detects_containment_of_point_source():
    # data radiated from Q lie in the range of test disks containing Q
    Q = np.array([0.8, 0.0])
    U = ps_pattern(Q, angles=full_circle(128))
    radii = 0.1 * np.arange(1, 21)
    scan = radius_scan(U, (0.0, 0.0), radii, eps=1.0)
    assert not scan.flagged
    assert 0.4 <= scan.r_p <= 0.8
    inside = scan.values[radii >= 1.0 - 1e-12]
    assert inside.min() > 10 * scan.values[radii <= 0.4 + 1e-12].max()
    assert inside.max() < 1.5 * inside.min()
    g = scan.as_grid()
    assert g.columns == ("p1", "p2", "radius")
    flagged = radius_from_curve(radii, np.ones(20), 0.5)
    assert flagged == (0.0, True)
    with pytest.raises(ValueError):
        indicator_curve(U, (0, 0), radii[::-1])


def test_aperture_curve_uses_lowrank_path_consistently():
    a = aperture_angles(5 * np.pi / 4, 11 * np.pi / 4, 60)
    U = ps_pattern((0.3, 0.0), angles=a)
    radii = np.array([0.5, 1.0])
    lo = indicator_curve(U, (0.0, 0.0), radii, aperture=(a[0], a[-1]), method="lapack")
    dense = [factorization_indicator(
        U, disk_test_eigensystem(impedance_disk((0, 0), r, K), U, (a[0], a[-1]), "lapack", dense=True), 1e-8)
        for r in radii]
    assert np.allclose(lo, dense, rtol=1e-6)


def test_default_threshold():
    assert default_threshold([1.0, 100.0, SENTINEL, 0.0]) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        default_threshold([0.0, 0.0])


def test_contrast_disk_and_crack():
    disk = DiskScatterer((1.0, 0.0), 0.5)
    U = disk_pattern(disk, (1.0, 0.0), ANG, K)
    g = contrast_disk(U, [(1.0, 0.0), (0.0, 0.0)], 0.5, (1.0, 0.0))
    assert g.sentinel[0] and not g.sentinel[1]
    crack = PiecewiseLinearCrack([(-0.5, 0.0), (0.5, 0.0)])
    inc = PlaneWave(K, (1.0, 0.0))
    data = crack_farfield(crack.translated((0.5, 0.0)), inc, ANG, knots_per_segment=16)
    shifts = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)]
    grid = contrast_crack(data, shifted_crack_patterns(crack, inc, ANG, shifts, knots_per_segment=16))
    assert grid.sentinel[0]
    assert grid.values[1] > 1e6 * grid.values[2]


def test_indicator_grid_validation():
    with pytest.raises(ValueError):
        IndicatorGrid(("a",), [[1.0], [2.0]], [1.0])
    with pytest.raises(ValueError):
        IndicatorGrid(("a",), [[1.0]], [-1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), m=st.integers(1, 8))
def test_support_accumulate_properties(seed, m):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-2, 2, size=(m, 2))
    radii = rng.uniform(0, 2, size=m)
    xs = np.linspace(-3, 3, 13)
    ys = np.linspace(-3, 3, 11)
    field = support_accumulate(centers, radii, xs, ys)
    assert field.shape == (11, 13)
    assert field.min() >= 0 and field.max() <= m
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    assert np.array_equal(field.ravel(), support_count_at(centers, radii, pts))
    bigger = support_accumulate(centers, radii + 0.5, xs, ys)
    assert np.all(bigger >= field)
    assert np.array_equal(support_accumulate(centers, np.zeros(m), xs, ys) >= 0, np.ones_like(field, bool))


def test_circle_centers():
    c = circle_centers(10.0, 4)
    assert np.allclose(c, [(10, 0), (0, 10), (-10, 0), (0, -10)], atol=1e-12)
    with pytest.raises(ValueError):
        support_accumulate(c, [1.0], [0.0], [0.0])
