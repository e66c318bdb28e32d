"""Piecewise-linear cracks and the corner-graded Nystrom mesh."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Raised for degenerate or self-intersecting cracks and bad mesh sizes."""


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, c, tol) -> bool:
    return (min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol
            and min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol)


def segments_intersect(a, b, c, d, tol: float = 1e-12) -> bool:
    """Closed-segment intersection test for ``[a, b]`` and ``[c, d]``."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > tol and o2 < -tol) or (o1 < -tol and o2 > tol)) and \
            ((o3 > tol and o4 < -tol) or (o3 < -tol and o4 > tol)):
        return True
    if abs(o1) <= tol and _on_segment(a, b, c, tol):
        return True
    if abs(o2) <= tol and _on_segment(a, b, d, tol):
        return True
    if abs(o3) <= tol and _on_segment(c, d, a, tol):
        return True
    if abs(o4) <= tol and _on_segment(c, d, b, tol):
        return True
    return False


@dataclass(frozen=True)
class PiecewiseLinearCrack:
    """Open polyline through ``corners[0], ..., corners[N]`` (tips first and last)."""

    corners: np.ndarray

    def __post_init__(self):
        pts = np.array(self.corners, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise GeometryError("a crack needs at least two corners given as (x, y) pairs")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("corner coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "corners", pts)
        self.validate()

    @property
    def n_segments(self) -> int:
        return len(self.corners) - 1

    def validate(self) -> None:
        pts = self.corners
        seg = np.diff(pts, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        scale = max(float(np.max(np.abs(pts))), 1.0)
        if np.any(lengths <= 1e-12 * scale):
            raise GeometryError("consecutive corners coincide (zero-length segment)")
        tol = 1e-12 * scale * scale
        n = self.n_segments
        for i in range(n - 1):
            # adjacent segments may only share their common corner
            u, v = seg[i], seg[i + 1]
            cross = u[0] * v[1] - u[1] * v[0]
            if abs(cross) <= 1e-12 * lengths[i] * lengths[i + 1] and np.dot(u, v) < 0:
                raise GeometryError(f"segments {i} and {i + 1} fold back onto each other")
            for j in range(i + 2, n):
                if segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1], tol):
                    raise GeometryError(f"segments {i} and {j} intersect")

    @property
    def segment_lengths(self) -> np.ndarray:
        seg = np.diff(self.corners, axis=0)
        return np.hypot(seg[:, 0], seg[:, 1])

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def translated(self, a) -> "PiecewiseLinearCrack":
        return PiecewiseLinearCrack(self.corners + np.asarray(a, dtype=float))

    def with_corners(self, corners) -> "PiecewiseLinearCrack":
        return PiecewiseLinearCrack(np.asarray(corners, dtype=float))

    def parametrize(self, t):
        """Point ``x(t)`` and derivative ``x'(t)`` for ``t`` in ``[0, 2 pi)``.

        Segment ``l`` covers ``[2 l pi / N, 2 (l+1) pi / N)`` and is traversed
        affinely, so ``x(2 l pi / N) = P_l``.
        """
        t = np.asarray(t, dtype=float)
        n = self.n_segments
        u = t * n / TWO_PI
        ell = np.clip(np.floor(u).astype(int), 0, n - 1)
        frac = u - ell
        p0 = self.corners[ell]
        p1 = self.corners[ell + 1]
        x = p0 + frac[..., None] * (p1 - p0)
        dx = (n / TWO_PI) * (p1 - p0)
        return x, dx

    def distance(self, pts) -> np.ndarray:
        """Euclidean distance from point(s) to the polyline."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        best = np.full(len(pts), np.inf)
        for a, b in zip(self.corners[:-1], self.corners[1:]):
            ab = b - a
            lam = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
            proj = a + lam[:, None] * ab
            best = np.minimum(best, np.hypot(*(pts - proj).T))
        return best

    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = self.corners.min(axis=0)
        hi = self.corners.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


@dataclass(frozen=True)
class GradingParams:
    """Grading exponent ``p`` and half knot count ``n`` (2n knots in total)."""

    p: float = 3.0
    n: int = 64

    def __post_init__(self):
        if not self.p >= 2:
            raise GeometryError(f"grading exponent must satisfy p >= 2, got {self.p}")
        if int(self.n) != self.n or self.n < 1:
            raise GeometryError(f"n must be a positive integer, got {self.n}")

    @classmethod
    def per_segment(cls, knots_per_segment: int, n_segments: int, p: float = 3.0) -> "GradingParams":
        total = knots_per_segment * n_segments
        if total % 2:
            raise GeometryError("total knot count must be even")
        return cls(p=p, n=total // 2)


def _v(s, p):
    a = (1.0 / p - 0.5) * ((np.pi - s) / np.pi) ** 3
    return a + (s - np.pi) / (p * np.pi) + 0.5


def _dv(s, p):
    return -3.0 * (1.0 / p - 0.5) * (np.pi - s) ** 2 / np.pi ** 3 + 1.0 / (p * np.pi)


def grading_function(p: float, s):
    """Sigmoid substitution ``w~(s)`` on ``[0, 2 pi]`` and its derivative.

    ``w~`` maps ``[0, 2pi]`` onto itself, is symmetric in the sense
    ``w~(s) + w~(2pi - s) = 2pi`` and has derivative vanishing to order
    ``p - 1`` at both endpoints.
    """
    s = np.asarray(s, dtype=float)
    va = _v(s, p)
    vb = _v(TWO_PI - s, p)
    a = va ** p
    b = vb ** p
    den = a + b
    w = TWO_PI * a / den
    da = p * va ** (p - 1) * _dv(s, p)
    db = -p * vb ** (p - 1) * _dv(TWO_PI - s, p)
    dw = TWO_PI * (da * b - a * db) / den ** 2
    return w, dw


@dataclass(frozen=True)
class GradedMesh:
    """Quadrature knots of the graded Nystrom scheme (arrays of length 2n)."""

    crack: PiecewiseLinearCrack
    params: GradingParams
    s: np.ndarray
    t: np.ndarray
    points: np.ndarray
    wprime: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    segment: np.ndarray
    frac: np.ndarray
    # second derivative of x(t); identically zero on straight segments
    curvature_term: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def size(self) -> int:
        return len(self.s)

    @property
    def speed(self) -> np.ndarray:
        """``|x'(t_j)|``, the diagonal of ``D_Gamma``."""
        return np.hypot(self.tangents[:, 0], self.tangents[:, 1])

    @property
    def knots_per_segment(self) -> int:
        return self.size // self.crack.n_segments


def substitution(crack: PiecewiseLinearCrack, p: float, s):
    """Per-segment graded substitution ``t = w(s)`` evaluated at ``s``.

    Returns ``(t, w'(s), segment index, fraction along segment, x(t), x'(t))``.
    """
    nseg = crack.n_segments
    s = np.asarray(s, dtype=float)
    ell = np.clip(np.floor(s * nseg / TWO_PI).astype(int), 0, nseg - 1)
    u = nseg * s - TWO_PI * ell
    wt, dwt = grading_function(p, u)
    t = (TWO_PI * ell + wt) / nseg
    frac = wt / TWO_PI
    p0 = crack.corners[ell]
    p1 = crack.corners[ell + 1]
    pts = p0 + frac[..., None] * (p1 - p0)
    tang = (nseg / TWO_PI) * (p1 - p0)
    return t, dwt, ell, frac, pts, tang


def build_mesh(crack: PiecewiseLinearCrack, params: GradingParams) -> GradedMesh:
    """Graded mesh with ``2n/N`` knots on every segment of ``crack``."""
    nseg = crack.n_segments
    n = int(params.n)
    if (2 * n) % nseg:
        raise GeometryError(f"2n = {2 * n} knots cannot be split evenly over {nseg} segments")
    j = np.arange(2 * n)
    s = np.pi / (2 * n) + j * np.pi / n
    t, dwt, ell, frac, pts, tang = substitution(crack, params.p, s)
    # knot j sits on segment floor(j N / 2n); guard the floor against rounding
    assert np.array_equal(ell, (j * nseg) // (2 * n))
    speed = np.hypot(tang[:, 0], tang[:, 1])
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / speed[:, None]
    for arr in (s, t, pts, dwt, tang, normals, ell, frac):
        arr.setflags(write=False)
    return GradedMesh(crack=crack, params=params, s=s, t=t, points=pts, wprime=dwt,
                      tangents=tang, normals=normals, segment=ell, frac=frac,
                      curvature_term=np.zeros(2 * n))
