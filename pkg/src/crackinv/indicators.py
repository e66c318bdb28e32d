"""Sampling indicators: contrast sampling and the one-wave factorization method."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .forward import FarFieldPattern, crack_farfield
from .geometry import PiecewiseLinearCrack
from .scatterers import (DiskScatterer, Eigensystem, Impedance, disk_eigensystem, disk_farfield,
                         disk_fsharp_eigensystem, farfield_matrix, fsharp_eigensystem)
from .specfun import point_source_farfield, series_order

#: stands in for +infinity when a misfit or Picard sum vanishes
SENTINEL = sys.float_info.max

#: relative floor below which raw Picard sums drop eigenvalues
RAW_FLOOR = 1e-14


def is_sentinel(value) -> np.ndarray:
    return np.asarray(value) >= SENTINEL


def _invert(den: float) -> float:
    return SENTINEL if den <= 0.0 else 1.0 / den


def _samples(U) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(U, FarFieldPattern):
        return U.values, U.weights
    vals = np.asarray(U, dtype=complex)
    return vals, np.full(len(vals), 2.0 * np.pi / len(vals))


def misfit(U, V, weights=None) -> float:
    """Weighted squared L2 distance ``int |U - V|^2 ds`` on the data grid."""
    u, w = _samples(U)
    v = V.values if isinstance(V, FarFieldPattern) else np.asarray(V, dtype=complex)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"far-field samples differ in shape: {u.shape} vs {v.shape}")
    return float(np.sum(w * np.abs(u - v) ** 2))


@dataclass
class RegularizationParams:
    """Tikhonov parameter ``alpha`` and containment threshold ``eps``."""

    alpha: float = 1e-8
    eps: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass
class IndicatorGrid:
    """Indicator values over sample descriptors (one row per sample)."""

    columns: tuple
    samples: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        self.columns = tuple(self.columns)
        if self.samples.shape != (len(self.values), len(self.columns)):
            raise ValueError("samples must have one row per value and one column per descriptor")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("indicator values must be finite and nonnegative")

    @property
    def sentinel(self) -> np.ndarray:
        return is_sentinel(self.values)

    def argmax(self) -> int:
        return int(np.argmax(self.values))

    def __eq__(self, other):
        if not isinstance(other, IndicatorGrid):
            return NotImplemented
        return (self.columns == other.columns and np.array_equal(self.samples, other.samples)
                and np.array_equal(self.values, other.values) and self.meta == other.meta)


# ----------------------------------------------------------------- contrast sampling

def contrast_crack(U: FarFieldPattern, shifted) -> IndicatorGrid:
    """``I_crack(a)`` from precomputed far fields of shifted cracks.

    ``shifted`` is a sequence of ``(a, pattern)`` pairs; the shift ``a = 0`` is
    assigned the sentinel without comparing data.
    """
    shifts, vals = [], []
    for a, V in shifted:
        a = np.asarray(a, dtype=float)
        shifts.append(a)
        vals.append(SENTINEL if not np.any(a) else _invert(misfit(U, V)))
    return IndicatorGrid(("a1", "a2"), np.array(shifts), np.array(vals),
                         meta={"indicator": "crack", "k": U.k})


def shifted_crack_patterns(crack: PiecewiseLinearCrack, incident, angles, shifts,
                           knots_per_segment: int | None = None):
    """Forward solves for every shifted crack ``Gamma + a``."""
    out = []
    for a in shifts:
        V = crack_farfield(crack.translated(a), incident, angles, knots_per_segment)
        out.append((tuple(np.asarray(a, dtype=float)), V))
    return out


def contrast_point_source(U: FarFieldPattern, P, tau: complex = 1.0) -> float:
    """``I_ps(P; tau)``: inverse misfit against ``tau Phi^inf(., P)``."""
    if tau == 0:
        raise ValueError("scattering strength tau must be nonzero")
    V = tau * point_source_farfield(U.k, U.directions, np.asarray(P, dtype=float))
    return _invert(misfit(U, V))


def contrast_point_source_grid(U: FarFieldPattern, points, tau: complex = 1.0) -> IndicatorGrid:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = [contrast_point_source(U, p, tau) for p in pts]
    return IndicatorGrid(("p1", "p2"), pts, np.array(vals),
                         meta={"indicator": "point_source", "k": U.k, "tau": [complex(tau).real, complex(tau).imag]})


def contrast_disk(U: FarFieldPattern, centers, radius: float, direction, kind=None) -> IndicatorGrid:
    """``I_disk(P; R)`` against disks ``B_R(P)`` hit by the plane wave ``direction``."""
    pts = np.atleast_2d(np.asarray(centers, dtype=float))
    d = np.asarray(direction, dtype=float)
    vals = []
    for p in pts:
        disk = DiskScatterer(tuple(p), radius) if kind is None else DiskScatterer(tuple(p), radius, kind)
        V = disk_farfield(disk, d, U.directions, U.k)
        vals.append(_invert(misfit(U, V)))
    return IndicatorGrid(("p1", "p2"), pts, np.array(vals),
                         meta={"indicator": "disk", "k": U.k, "radius": radius})


# ----------------------------------------------------------------- factorization method

def picard_terms(U, eig: Eigensystem) -> np.ndarray:
    """``|(U, f_n)|^2`` for every eigenpair."""
    return np.abs(eig.inner_products(U)) ** 2


def picard_value(lambdas, terms, alpha: float | None = None, floor: float = RAW_FLOOR) -> float:
    lambdas = np.asarray(lambdas, dtype=float)
    terms = np.asarray(terms, dtype=float)
    if alpha is None:
        if lambdas.size == 0 or lambdas.max() == 0:
            return SENTINEL if not np.any(terms) else 0.0
        keep = lambdas >= floor * lambdas.max()
        total = float(np.sum(terms[keep] / lambdas[keep]))
    else:
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        total = float(np.sum(lambdas / (alpha + lambdas) ** 2 * terms))
    return _invert(total)


def factorization_indicator(U, eig: Eigensystem, alpha: float | None = None,
                            floor: float = RAW_FLOOR) -> float:
    """Inverse Picard sum ``{sum_n w_n |(U, f_n)|^2}^{-1}``.

    Without ``alpha`` the raw weights ``1/lambda_n`` are used on eigenvalues
    above ``floor * lambda_max``; with ``alpha`` the Tikhonov weights
    ``lambda_n / (alpha + lambda_n)^2``.
    """
    return picard_value(eig.lambdas, picard_terms(U, eig), alpha, floor)


def factorization_indicator_la(U_aperture, eig_la: Eigensystem, alpha: float | None = None,
                               floor: float = RAW_FLOOR) -> float:
    """Limited-aperture variant; data and eigensystem live on the aperture grid."""
    return factorization_indicator(U_aperture, eig_la, alpha, floor)


def disk_test_eigensystem(disk: DiskScatterer, U: FarFieldPattern, aperture=None,
                          method: str = "auto", dense: bool = False) -> Eigensystem:
    """Eigensystem of the test disk on the grid of ``U``.

    Full-circle data use the analytic disk eigensystem; aperture data use the
    numerical ``F_{la,#}`` on the aperture grid, computed on the range of the
    disk's far-field matrix (or from the full dense matrix when ``dense``).
    """
    if aperture is None:
        return disk_eigensystem(disk, U.angles, U.k, U.weights)
    if not dense:
        return disk_fsharp_eigensystem(disk, U.angles, U.k, U.weights, method=method)
    F = farfield_matrix(disk, U.angles, U.k)
    F = type(F)(F.entries, F.angles, F.k, U.weights, aperture, F.meta)
    return fsharp_eigensystem(F, method)


def impedance_disk(center, radius: float, k: float, eta=None) -> DiskScatterer:
    """Impedance test disk, ``eta = i k`` by default."""
    return DiskScatterer(tuple(center), radius, Impedance(1j * k if eta is None else eta))


@dataclass
class RadiusScan:
    """Regularized indicator over growing radii around one center."""

    center: tuple
    radii: np.ndarray
    values: np.ndarray
    eps: float
    r_p: float
    flagged: bool

    def as_grid(self) -> IndicatorGrid:
        samples = np.column_stack([np.full(len(self.radii), self.center[0]),
                                   np.full(len(self.radii), self.center[1]), self.radii])
        return IndicatorGrid(("p1", "p2", "radius"), samples, self.values,
                             meta={"indicator": "factorization", "eps": self.eps, "r_p": self.r_p,
                                   "flagged": self.flagged})


def indicator_curve(U: FarFieldPattern, center, radii, kind_factory=None, alpha: float = 1e-8,
                    aperture=None, method: str = "auto") -> np.ndarray:
    """Regularized factorization indicator of disks ``B_r(center)`` for each ``r``.

    ``kind_factory(k)`` returns the boundary kind (impedance ``eta = ik`` by
    default).  On a full uniform circle the inner products with the analytic
    eigenvectors are computed once for all radii.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    k = U.k
    kind = Impedance(1j * k) if kind_factory is None else kind_factory(k)
    if aperture is not None:
        return np.array([factorization_indicator(
            U, disk_test_eigensystem(DiskScatterer(tuple(center), r, kind), U, aperture, method), alpha)
            for r in radii])
    count = len(U.angles)
    nmax = min(series_order(k * radii[-1]), (count - 1) // 2)
    top = DiskScatterer(tuple(center), radii[-1], kind)
    eig = disk_eigensystem(top, U.angles, k, U.weights, nmax)
    order = np.argsort(eig.orders)
    vec = eig.vectors[:, order]
    terms = np.abs(vec.conj().T @ (U.weights * U.values)) ** 2
    lam_scale = np.sqrt(8.0 * np.pi / k)
    out = np.empty(len(radii))
    for i, r in enumerate(radii):
        _, c = DiskScatterer(tuple(center), r, kind).coefficients(k, nmax)
        out[i] = picard_value(lam_scale * np.abs(c), terms, alpha)
    return out


def radius_from_curve(radii, values, eps: float) -> tuple[float, bool]:
    """Largest radius with indicator below ``eps``; ``(0, True)`` if there is none."""
    below = np.flatnonzero(np.asarray(values) < eps)
    if below.size == 0:
        return 0.0, True
    return float(np.asarray(radii)[below[-1]]), False


def radius_scan(U: FarFieldPattern, center, radii, eps: float | None = None, alpha: float = 1e-8,
                kind_factory=None, aperture=None, method: str = "auto") -> RadiusScan:
    """``r_P`` of the hybrid method for one center ``P``.

    When ``eps`` is omitted it defaults to the geometric mean of the curve's
    smallest and largest value.
    """
    radii = np.asarray(radii, dtype=float)
    vals = indicator_curve(U, center, radii, kind_factory, alpha, aperture, method)
    if eps is None:
        eps = default_threshold(vals)
    r_p, flagged = radius_from_curve(radii, vals, eps)
    return RadiusScan(tuple(float(c) for c in center), radii, vals, float(eps), r_p, flagged)


def default_threshold(values) -> float:
    v = np.asarray(values, dtype=float)
    v = v[(v > 0) & ~is_sentinel(v)]
    if v.size == 0:
        raise ValueError("cannot pick a threshold from an all-zero curve")
    return float(np.sqrt(v.min() * v.max()))


def support_accumulate(centers, radii, xs, ys) -> np.ndarray:
    """Count field ``sum_j chi_{P_j}(x)`` on the grid ``ys x xs`` (row = y)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float)
    if len(centers) != len(radii):
        raise ValueError("one radius per center required")
    gx, gy = np.meshgrid(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    count = np.zeros(gx.shape, dtype=np.int64)
    for (px, py), r in zip(centers, radii):
        count += (np.hypot(gx - px, gy - py) <= r).astype(np.int64)
    return count


def support_count_at(centers, radii, pts) -> np.ndarray:
    """Count ``sum_j chi_{P_j}`` at arbitrary points."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = np.hypot(pts[:, None, 0] - centers[None, :, 0], pts[:, None, 1] - centers[None, :, 1])
    return np.sum(d <= np.asarray(radii)[None, :], axis=1)


def circle_centers(radius: float, count: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(count) / count
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


__all__ = [
    "SENTINEL", "is_sentinel", "misfit", "RegularizationParams", "IndicatorGrid", "contrast_crack",
    "shifted_crack_patterns", "contrast_point_source", "contrast_point_source_grid", "contrast_disk",
    "picard_terms", "picard_value", "factorization_indicator", "factorization_indicator_la",
    "disk_test_eigensystem", "impedance_disk", "RadiusScan", "indicator_curve", "radius_from_curve",
    "radius_scan", "default_threshold", "support_accumulate", "support_count_at", "circle_centers",
]
