import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crackinv.forward import (FarFieldPattern, NearFieldWarning, PlaneWave, PointSource, ZeroField,
                              aperture_angles, assemble_system, boundary_total_field, crack_farfield,
                              default_weights, farfield, full_circle, incident_from_dict,
                              log_quadrature_weights, scattered_field, solve, solve_density)
from crackinv.geometry import GradingParams, PiecewiseLinearCrack, build_mesh

EX62 = PiecewiseLinearCrack([(1, 3), (3, 1), (2, 0)])
EX63 = PiecewiseLinearCrack([(0, 2), (-1, 1), (1, -1), (0, -2)])
EX65 = PiecewiseLinearCrack([(-1, 1), (1, -1), (0, -2)])
LINE = PiecewiseLinearCrack([(-1, 0), (1, 0)])


def unit(a):
    return np.array([np.cos(a), np.sin(a)])


@pytest.mark.parametrize("n", [4, 7, 16])
def test_log_quadrature_exact_on_trig_polynomials(n):
    # oracle: int_0^{2pi} ln(4 sin^2((t-s)/2)) cos(m s) ds = -2pi cos(m t)/m, and 0 for m = 0
    R = log_quadrature_weights(n)
    s = np.arange(2 * n) * np.pi / n
    for m in range(n):
        got = R @ np.cos(m * s)
        ref = np.zeros(2 * n) if m == 0 else -2 * np.pi * np.cos(m * s) / m
        assert np.allclose(got, ref, atol=1e-12)


def test_log_quadrature_weight_row_by_mpmath():
    n = 6
    R = log_quadrature_weights(n)
    s = np.arange(2 * n) * np.pi / n
    f = lambda t: mpmath.exp(mpmath.cos(t))
    ref = mpmath.quad(lambda t: mpmath.log(4 * mpmath.sin((s[3] - t) / 2) ** 2) * f(t),
                      [0, s[3], 2 * mpmath.pi])
    got = R[3] @ np.exp(np.cos(s))
    assert got == pytest.approx(float(ref), rel=1e-5)


def test_plane_wave_and_point_source_values():
    pw = PlaneWave(2.0, (0.0, 1.0))
    assert pw.value(np.array([[0.3, 0.5]]))[0] == pytest.approx(np.exp(1j))
    with pytest.raises(ValueError):
        PlaneWave(2.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        PlaneWave(-1.0, (1.0, 0.0))
    ps = PointSource(1.0, (0.0, 0.0))
    v = ps.value(np.array([[1.0, 0.0]]))[0]
    assert v == pytest.approx(0.25j * complex(mpmath.hankel1(0, 1.0)), rel=1e-12)
    h = 1e-6
    x = np.array([[0.7, -0.2]])
    fd = (ps.value(x + [h, 0]) - ps.value(x - [h, 0])) / (2 * h)
    assert ps.gradient(x)[0, 0] == pytest.approx(fd[0], rel=1e-7)
    assert isinstance(incident_from_dict({"kind": "plane_wave", "k": 2, "direction": [1, 0]}), PlaneWave)
    assert isinstance(incident_from_dict({"kind": "point_source", "k": 2, "source": [1, 0]}), PointSource)


def test_angle_grids_and_weights():
    a = full_circle(8)
    assert np.allclose(a, np.arange(8) * np.pi / 4)
    assert np.allclose(default_weights(a), 2 * np.pi / 8)
    b = aperture_angles(5 * np.pi / 4, 11 * np.pi / 4, 40)
    assert len(b) == 41
    assert b[0] == 5 * np.pi / 4 and b[-1] == pytest.approx(11 * np.pi / 4)
    assert np.allclose(default_weights(b), 3 * np.pi / 80)
    with pytest.raises(ValueError):
        FarFieldPattern([0.0, 0.0], [1, 2], 1.0)


def test_zero_incident_gives_zero_field():
    sol = solve(EX62, ZeroField(2.0), knots_per_segment=16)
    assert np.all(sol.wpsi == 0)
    assert np.all(farfield(sol, full_circle(8)).values == 0)


def test_system_is_symmetric_in_knot_pairs():
    # the kernel is symmetric in (x, y); the corner-graded quadrature weights make
    # M diag(1/w) symmetric after rescaling by the quadrature measure
    mesh = build_mesh(EX63, GradingParams(3.0, 12))
    M = assemble_system(mesh, 2.0)
    speed = mesh.speed
    S = M / speed[None, :]
    off = ~np.eye(len(speed), dtype=bool)
    assert np.allclose(S[off], S.T[off], rtol=1e-12, atol=1e-14)


def test_reciprocity_ex62():
    k = 2.0
    rng = np.random.default_rng(7)
    pairs = rng.uniform(0, 2 * np.pi, size=(16, 2))
    vals = []
    for a, b in pairs:
        u1 = crack_farfield(EX62, PlaneWave(k, unit(b)), [a], knots_per_segment=32).values[0]
        u2 = crack_farfield(EX62, PlaneWave(k, -unit(a)), [(b + np.pi) % (2 * np.pi)],
                            knots_per_segment=32).values[0]
        vals.append((u1, u2))
    vals = np.array(vals)
    scale = np.abs(vals).max()
    assert np.max(np.abs(vals[:, 0] - vals[:, 1])) <= 1e-4 * scale


def test_mirror_symmetry_straight_crack():
    # a horizontal crack hit from straight below scatters symmetrically about the y axis
    sol = solve(LINE, PlaneWave(3.0, (0.0, 1.0)), knots_per_segment=32)
    a = np.linspace(0.1, 3.0, 9)
    U1 = farfield(sol, a).values
    U2 = farfield(sol, np.pi - a[::-1]).values[::-1]
    assert np.allclose(U1, U2, rtol=1e-10, atol=1e-13)


def test_dirichlet_condition_holds_between_knots():
    sol = solve(EX63, PlaneWave(2.0, (1.0, 0.0)), knots_per_segment=32)
    n = sol.mesh.n
    s = np.arange(2 * n) * np.pi / n + 0.37 * np.pi / n
    s = s[(s > 0.2) & (s < 2 * np.pi - 0.2)]
    total = boundary_total_field(sol, s)
    assert np.max(np.abs(total)) < 5e-3
    with pytest.raises(ValueError):
        boundary_total_field(sol, sol.mesh.s[:2])


def test_farfield_matches_scattered_field_asymptotics():
    k = 2.0
    sol = solve(EX62, PlaneWave(k, (1.0, 0.0)), knots_per_segment=32)
    a = np.array([0.3, 2.0, 4.0])
    r = 1e3
    us = scattered_field(sol, r * np.column_stack([np.cos(a), np.sin(a)]))
    ff = farfield(sol, a).values
    scaled = us * np.sqrt(r) * np.exp(-1j * k * r)
    assert np.allclose(scaled, ff, atol=5e-3 * np.abs(ff).max())


def test_linearity_in_incident_field():
    k = 2.0
    mesh = build_mesh(EX62, GradingParams(3.0, 16))
    d1, d2 = unit(0.4), unit(2.2)
    s1 = solve_density(mesh, PlaneWave(k, d1))
    s2 = solve_density(mesh, PlaneWave(k, d2))

    class Sum:
        def __init__(self):
            self.k = k

        def value(self, x):
            return 2.0 * PlaneWave(k, d1).value(x) - 1j * PlaneWave(k, d2).value(x)

        def describe(self):
            return {}

    s3 = solve_density(mesh, Sum())
    assert np.allclose(s3.wpsi, 2.0 * s1.wpsi - 1j * s2.wpsi, rtol=1e-10, atol=1e-12)


def test_optical_theorem():
    # energy balance for a sound-soft scatterer with u^s ~ e^{ikr}/sqrt(r) u_inf:
    # ||u_inf||^2 = -sqrt(8 pi / k) Re(e^{i pi/4} u_inf(d, d))
    k, d = 2.0, 0.7
    sol = solve(EX62, PlaneWave(k, unit(d)), knots_per_segment=32)
    power = farfield(sol, full_circle(256)).norm() ** 2
    fwd = farfield(sol, [d]).values[0]
    assert power == pytest.approx(-np.sqrt(8 * np.pi / k) * np.real(np.exp(0.25j * np.pi) * fwd), rel=1e-6)


def test_self_convergence_ex65():
    inc = PlaneWave(5.0, (-1.0, 0.0))
    a = full_circle(64)
    U1 = crack_farfield(EX65, inc, a, knots_per_segment=64).values
    U2 = crack_farfield(EX65, inc, a, knots_per_segment=128).values
    assert np.linalg.norm(U2 - U1) / np.linalg.norm(U2) < 1e-4


def test_convergence_is_fast():
    inc = PlaneWave(2.0, (1.0, 0.0))
    a = full_circle(32)
    ref = crack_farfield(EX62, inc, a, knots_per_segment=128).values
    errs = [np.linalg.norm(crack_farfield(EX62, inc, a, knots_per_segment=n).values - ref)
            for n in (8, 16, 32)]
    assert errs[1] < errs[0] / 4 and errs[2] < errs[1] / 4


def test_mixed_reciprocity_ex63():
    k = 2.0
    y0 = np.array([2.0, -1.0])
    gamma = np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k)
    a = np.array([0.0, 1.0, 2.5, 4.0, 5.5])
    w = crack_farfield(EX63, PointSource(k, y0), a, knots_per_segment=32).values
    us = np.array([scattered_field(solve(EX63, PlaneWave(k, -unit(t)), knots_per_segment=32), y0)
                   for t in a])
    assert np.allclose(w, gamma * us, rtol=1e-3, atol=1e-3 * np.abs(w).max())


def test_near_field_warning():
    sol = solve(LINE, PlaneWave(1.0, (0.0, 1.0)), knots_per_segment=16)
    with pytest.warns(NearFieldWarning):
        scattered_field(sol, (0.0, 1e-3))
    with pytest.raises(ValueError):
        scattered_field(sol, (0.0, 0.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scattered_field(sol, (0.0, 3.0))


@settings(max_examples=15, deadline=None)
@given(shift=st.tuples(st.floats(-3, 3), st.floats(-3, 3)), a=st.floats(0, 2 * np.pi))
def test_translation_multiplies_by_phase(shift, a):
    # translating the crack by h changes u_inf(x, d) by exp(i k (d - x) . h)
    k, d = 2.0, unit(1.0)
    h = np.array(shift)
    moved = PiecewiseLinearCrack(EX62.corners + h)
    U0 = crack_farfield(EX62, PlaneWave(k, d), [a], knots_per_segment=8).values[0]
    U1 = crack_farfield(moved, PlaneWave(k, d), [a], knots_per_segment=8).values[0]
    assert U1 == pytest.approx(U0 * np.exp(1j * k * (d - unit(a)) @ h), rel=1e-9, abs=1e-12)
