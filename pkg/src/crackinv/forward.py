"""Nystrom solver for sound-soft scattering by a piecewise-linear crack.

The scattered field is a single-layer potential with density ``phi``.  On
the graded mesh the unknown is the product ``W Psi`` (grading derivative
times density at the knots), which stays bounded at tips and corners.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy import special

from . import _backend
from .geometry import GradedMesh, GradingParams, PiecewiseLinearCrack, build_mesh, substitution
from .specfun import farfield_constant


class SingularSystemError(RuntimeError):
    """Raised when the Nystrom matrix is numerically singular."""

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class NearFieldWarning(UserWarning):
    """Field evaluated close to the crack, where the quadrature degrades."""


# ----------------------------------------------------------------- incident fields

@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave ``exp(i k x . d)``."""

    k: float
    direction: tuple

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if self.k <= 0:
            raise ValueError("wave number must be positive")
        if abs(np.hypot(*d) - 1.0) > 1e-12:
            raise ValueError(f"incident direction must be a unit vector, got {tuple(d)}")
        object.__setattr__(self, "direction", (float(d[0]), float(d[1])))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        d = self.direction
        return np.exp(1j * self.k * (x[..., 0] * d[0] + x[..., 1] * d[1]))

    def gradient(self, x):
        d = np.asarray(self.direction)
        return (1j * self.k * self.value(x))[..., None] * d

    def describe(self) -> dict:
        return {"kind": "plane_wave", "k": self.k, "direction": list(self.direction)}


@dataclass(frozen=True)
class PointSource:
    """Incident point source ``Phi_k(x, y0)``."""

    k: float
    source: tuple

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("wave number must be positive")
        y = np.asarray(self.source, dtype=float)
        object.__setattr__(self, "source", (float(y[0]), float(y[1])))

    def _diff(self, x):
        x = np.asarray(x, dtype=float)
        return x - np.asarray(self.source)

    def value(self, x):
        diff = self._diff(x)
        r = np.hypot(diff[..., 0], diff[..., 1])
        return 0.25j * special.hankel1(0, self.k * r)

    def gradient(self, x):
        diff = self._diff(x)
        r = np.hypot(diff[..., 0], diff[..., 1])
        coef = -0.25j * self.k * special.hankel1(1, self.k * r) / r
        return coef[..., None] * diff

    def describe(self) -> dict:
        return {"kind": "point_source", "k": self.k, "source": list(self.source)}


class ZeroField:
    """Vanishing incident field (test hook)."""

    def __init__(self, k):
        self.k = k

    def value(self, x):
        return np.zeros(np.asarray(x).shape[:-1], dtype=complex)

    def gradient(self, x):
        return np.zeros(np.asarray(x).shape, dtype=complex)

    def describe(self) -> dict:
        return {"kind": "zero", "k": self.k}


def incident_from_dict(spec: dict):
    kind = spec.get("kind", "plane_wave")
    k = float(spec["k"])
    if kind == "plane_wave":
        return PlaneWave(k, tuple(spec["direction"]))
    if kind == "point_source":
        return PointSource(k, tuple(spec["source"]))
    raise ValueError(f"unknown incident field kind {kind!r}")


# ----------------------------------------------------------------- far-field data

@dataclass
class FarFieldPattern:
    """Complex far-field samples on directions ``(cos a, sin a)``."""

    angles: np.ndarray
    values: np.ndarray
    k: float
    weights: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.angles.shape != self.values.shape:
            raise ValueError("angles and values must have the same length")
        if np.any(np.diff(self.angles) <= 0):
            raise ValueError("far-field directions must be strictly increasing in angle")
        if self.weights is None:
            self.weights = default_weights(self.angles)
        self.weights = np.asarray(self.weights, dtype=float)

    @property
    def directions(self) -> np.ndarray:
        return directions(self.angles)

    def norm(self, other=None) -> float:
        """Weighted L2 norm of the pattern (or of its difference to ``other``)."""
        vals = self.values if other is None else self.values - _values(other)
        return float(np.sqrt(np.sum(self.weights * np.abs(vals) ** 2)))

    def with_values(self, values, **meta) -> "FarFieldPattern":
        return FarFieldPattern(self.angles.copy(), np.asarray(values, dtype=complex), self.k,
                               self.weights.copy(), {**self.meta, **meta})

    def __eq__(self, other):
        if not isinstance(other, FarFieldPattern):
            return NotImplemented
        return (np.array_equal(self.angles, other.angles)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.weights, other.weights)
                and self.k == other.k and self.meta == other.meta)


def _values(x):
    return x.values if isinstance(x, FarFieldPattern) else np.asarray(x)


def directions(angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def full_circle(count: int) -> np.ndarray:
    """Uniform angles ``2 pi p / count``, ``p = 0..count-1``."""
    return 2.0 * np.pi * np.arange(count) / count


def aperture_angles(start: float, stop: float, intervals: int, endpoint: bool = True) -> np.ndarray:
    """Uniform angles ``start + (stop - start) p / intervals``."""
    p = np.arange(intervals + 1 if endpoint else intervals)
    return start + (stop - start) * p / intervals


def default_weights(angles) -> np.ndarray:
    """Uniform quadrature weights; ``2 pi / L`` on a full uniform circle,
    otherwise the sample spacing."""
    angles = np.asarray(angles, dtype=float)
    if len(angles) < 2:
        return np.full(len(angles), 2.0 * np.pi)
    step = (angles[-1] - angles[0]) / (len(angles) - 1)
    if abs(step * len(angles) - 2.0 * np.pi) < 1e-9:
        return np.full(len(angles), 2.0 * np.pi / len(angles))
    return np.full(len(angles), step)


# ----------------------------------------------------------------- quadrature

@lru_cache(maxsize=32)
def _log_tables(n: int):
    m = 2 * n
    d = np.arange(m)
    diff = d * np.pi / n
    mm = np.arange(1, n)
    row = -(2 * np.pi / n) * (np.cos(np.outer(diff, mm)) / mm).sum(axis=1) \
        - (np.pi / n ** 2) * np.cos(n * diff)
    idx = (d[:, None] - d[None, :]) % m
    R = np.ascontiguousarray(row[idx])
    with np.errstate(divide="ignore"):
        ls_row = np.log(4.0 * np.sin(diff / 2.0) ** 2)
    ls_row[0] = 0.0
    logsin = np.ascontiguousarray(ls_row[idx])
    R.setflags(write=False)
    logsin.setflags(write=False)
    return R, logsin


def log_quadrature_weights(n: int) -> np.ndarray:
    """Weights ``R_j(s_i)`` integrating ``ln(4 sin^2((s_i - s)/2)) f(s)`` over a
    period from the ``2n`` equispaced samples ``f(s_j)`` (exact for
    trigonometric polynomials of degree below ``n``)."""
    return _log_tables(n)[0]


def assemble_system(mesh: GradedMesh, k: float, with_derivatives: bool = False):
    """Nystrom matrix ``M_corner`` (and the ``H``, ``L`` matrices on request)."""
    R, logsin = _log_tables(mesh.n)
    M, H, L = _backend.assemble_kernels(
        np.ascontiguousarray(mesh.points), np.ascontiguousarray(mesh.tangents),
        np.ascontiguousarray(mesh.wprime), np.ascontiguousarray(mesh.curvature_term),
        float(k), R, logsin, bool(with_derivatives))
    if with_derivatives:
        return M, H, L
    return M


# ----------------------------------------------------------------- solution

@dataclass
class DensitySolution:
    """Solution ``W Psi`` of the discrete single-layer equation."""

    wpsi: np.ndarray
    mesh: GradedMesh
    incident: object
    matrix: np.ndarray = field(repr=False, default=None)
    lu: tuple = field(repr=False, default=None)
    condition: float = float("nan")

    @property
    def k(self) -> float:
        return self.incident.k

    @property
    def weights(self) -> np.ndarray:
        """``(pi/n) |x'(t_j)| w'(s_j)`` folded with the unknown: quadrature
        weights applied to ``W Psi``."""
        return (np.pi / self.mesh.n) * self.mesh.speed


def solve_density(mesh: GradedMesh, incident, max_condition: float = 1e12) -> DensitySolution:
    """Solve ``M_corner (W Psi) = -2 u^i`` by dense LU."""
    M = assemble_system(mesh, incident.k)
    rhs = -2.0 * incident.value(mesh.points)
    lu, piv = sla.lu_factor(M)
    anorm = np.linalg.norm(M, 1)
    rcond, _ = sla.lapack.zgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not cond < max_condition:
        raise SingularSystemError("Nystrom system is numerically singular", cond)
    wpsi = sla.lu_solve((lu, piv), rhs)
    wpsi.setflags(write=False)
    return DensitySolution(wpsi=wpsi, mesh=mesh, incident=incident, matrix=M,
                           lu=(lu, piv), condition=cond)


def solve(crack: PiecewiseLinearCrack, incident, params: GradingParams | None = None,
          knots_per_segment: int | None = None) -> DensitySolution:
    """Convenience wrapper: mesh the crack and solve."""
    if params is None:
        params = GradingParams.per_segment(knots_per_segment or DEFAULT_KNOTS_PER_SEGMENT,
                                           crack.n_segments)
    return solve_density(build_mesh(crack, params), incident)


DEFAULT_KNOTS_PER_SEGMENT = 64


def scattered_field(sol: DensitySolution, x, warn: bool = True):
    """Single-layer potential of the density at point(s) ``x`` off the crack."""
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    mesh = sol.mesh
    if warn:
        spacing = np.max(np.hypot(*np.diff(mesh.points, axis=0).T))
        dist = mesh.crack.distance(pts)
        if np.any(dist == 0):
            raise ValueError("scattered field requested on the crack itself")
        if np.any(dist < 2 * spacing):
            warnings.warn("evaluation point within two knot spacings of the crack; "
                          "quadrature accuracy degrades", NearFieldWarning, stacklevel=2)
    diff = pts[:, None, :] - mesh.points[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    phi = 0.25j * special.hankel1(0, sol.k * r)
    out = phi @ (sol.weights * sol.wpsi)
    return out if x.ndim > 1 else out[0]


def log_weights_at(n: int, s) -> np.ndarray:
    """Rows ``R_j(s)`` of the logarithmic quadrature at arbitrary ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    sj = np.pi / (2 * n) + np.arange(2 * n) * np.pi / n
    diff = s[:, None] - sj[None, :]
    mm = np.arange(1, n)
    series = (np.cos(diff[..., None] * mm) / mm).sum(axis=-1)
    return -(2 * np.pi / n) * series - (np.pi / n ** 2) * np.cos(n * diff)


def boundary_trace(sol: DensitySolution, s):
    """Scattered field on the crack at parameters ``s`` via the Nystrom interpolant.

    The discrete single-layer operator is evaluated at ``x(w(s))`` with the same
    logarithmic splitting used for the system, which gives ``2 u^s`` there.
    ``s`` must avoid the knots themselves.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    mesh = sol.mesh
    n = mesh.n
    _, _, _, _, x, _ = substitution(mesh.crack, mesh.params.p, s)
    sj = mesh.s
    ds = s[:, None] - sj[None, :]
    sin2 = np.sin(ds / 2.0) ** 2
    if np.any(sin2 < 1e-28):
        raise ValueError("trace parameters must not coincide with quadrature knots")
    diff = x[:, None, :] - mesh.points[None, :, :]
    kr = sol.k * np.hypot(diff[..., 0], diff[..., 1])
    speed = mesh.speed[None, :]
    m1 = -special.j0(kr) * speed / (2 * np.pi)
    full = 0.5j * special.hankel1(0, kr) * speed
    rows = log_weights_at(n, s) * m1 + (np.pi / n) * (full - m1 * np.log(4.0 * sin2))
    return 0.5 * (rows @ sol.wpsi)


def boundary_total_field(sol: DensitySolution, s):
    """Total field ``u^i + u^s`` on the crack at parameters ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    _, _, _, _, x, _ = substitution(sol.mesh.crack, sol.mesh.params.p, s)
    return sol.incident.value(x) + boundary_trace(sol, s)


def farfield(sol: DensitySolution, angles) -> FarFieldPattern:
    """Far-field pattern of the scattered field at the given angles."""
    angles = np.asarray(angles, dtype=float)
    vals = farfield_values(sol.mesh, sol.k, sol.wpsi, directions(angles))
    return FarFieldPattern(angles, vals, sol.k, meta={"incident": sol.incident.describe()})


def farfield_values(mesh: GradedMesh, k: float, wpsi, dirs) -> np.ndarray:
    phase = np.exp(-1j * k * (dirs @ mesh.points.T))
    return farfield_constant(k) * (phase @ ((np.pi / mesh.n) * mesh.speed * wpsi))


def total_field(sol: DensitySolution, x, warn: bool = False):
    return sol.incident.value(np.asarray(x, dtype=float)) + scattered_field(sol, x, warn=warn)


def crack_farfield(crack: PiecewiseLinearCrack, incident, angles,
                   knots_per_segment: int | None = None, p: float = 3.0) -> FarFieldPattern:
    """Far-field pattern of ``crack`` for ``incident`` sampled at ``angles``."""
    params = GradingParams.per_segment(knots_per_segment or DEFAULT_KNOTS_PER_SEGMENT,
                                       crack.n_segments, p=p)
    return farfield(solve_density(build_mesh(crack, params), incident), angles)
