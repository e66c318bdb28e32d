"""Circular test scatterers, far-field matrices and ``F_#`` eigensystems."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _backend
from .forward import FarFieldPattern, default_weights, directions
from .specfun import bessel_j_orders, bessel_y_orders, series_order

#: matrices up to this size go through the cyclic Jacobi solver by default
JACOBI_MAX_SIZE = 64


# ----------------------------------------------------------------- boundary kinds

@dataclass(frozen=True)
class Dirichlet:
    """Sound-soft boundary, ``u = 0``."""

    def describe(self) -> dict:
        return {"kind": "dirichlet"}


@dataclass(frozen=True)
class Impedance:
    """Impedance boundary ``du/dnu + eta u = 0`` with ``Im eta >= 0``."""

    eta: complex

    def __post_init__(self):
        eta = complex(self.eta)
        if eta.imag < 0:
            raise ValueError(f"impedance coefficient needs Im eta >= 0, got {eta}")
        object.__setattr__(self, "eta", eta)

    def describe(self) -> dict:
        return {"kind": "impedance", "eta": [self.eta.real, self.eta.imag]}


@dataclass(frozen=True)
class Penetrable:
    """Homogeneous medium with constant refractive index ``n`` inside the disk."""

    index: complex

    def __post_init__(self):
        idx = complex(self.index)
        if idx == 0:
            raise ValueError("refractive index must be nonzero")
        object.__setattr__(self, "index", idx)

    def describe(self) -> dict:
        return {"kind": "penetrable", "index": [self.index.real, self.index.imag]}


def kind_from_dict(spec: dict, k: float | None = None):
    kind = spec.get("kind", "dirichlet")
    if kind == "dirichlet":
        return Dirichlet()
    if kind == "neumann":
        return Impedance(0.0)
    if kind == "impedance":
        eta = spec.get("eta")
        if eta is None:
            if k is None:
                raise ValueError("impedance kind without eta needs the wave number")
            eta = 1j * k
        elif isinstance(eta, (list, tuple)):
            eta = complex(eta[0], eta[1])
        return Impedance(complex(eta))
    if kind == "penetrable":
        idx = spec["index"]
        if isinstance(idx, (list, tuple)):
            idx = complex(idx[0], idx[1])
        return Penetrable(complex(idx))
    raise ValueError(f"unknown disk kind {kind!r}")


# ----------------------------------------------------------------- disks

@dataclass(frozen=True)
class DiskScatterer:
    """Disk ``B_R(P)`` with a boundary kind."""

    center: tuple
    radius: float
    kind: object = field(default_factory=Dirichlet)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (2,) or not np.all(np.isfinite(c)):
            raise ValueError("disk center must be a finite point")
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(c[0]), float(c[1])))
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1]) <= self.radius

    def coefficients(self, k: float, nmax: int | None = None):
        """Orders ``-nmax..nmax`` and the ratios ``c_n`` in
        ``u^inf = -sqrt(2/(k pi)) e^{-i pi/4} sum c_n e^{in(theta_x - theta_d)} e^{ik P.(d - xhat)}``."""
        if not k > 0:
            raise ValueError("wave number must be positive")
        kr = k * self.radius
        if nmax is None:
            nmax = series_order(kr)
        orders = np.arange(-nmax, nmax + 1)
        j = bessel_j_orders(nmax + 1, kr)
        y = bessel_y_orders(nmax + 1, kr)
        h = j + 1j * y
        kind = self.kind
        if isinstance(kind, Dirichlet):
            c = j[: nmax + 1] / h[: nmax + 1]
        elif isinstance(kind, Impedance):
            n = np.arange(nmax + 1)
            jm = np.concatenate([[-j[1]], j[:nmax]])  # J_{n-1}
            hm = np.concatenate([[-h[1]], h[:nmax]])
            dj = jm - n / kr * j[: nmax + 1]
            dh = hm - n / kr * h[: nmax + 1]
            eta = kind.eta
            c = (k * dj + eta * j[: nmax + 1]) / (k * dh + eta * h[: nmax + 1])
        elif isinstance(kind, Penetrable):
            c = _penetrable_ratio(k, self.radius, kind.index, nmax, j, h)
        else:
            raise TypeError(f"unsupported disk kind {kind!r}")
        # |c_n| is even in n for every kind; the ratio itself is even too
        c = np.where(np.isfinite(c), c, 0.0)
        return orders, np.concatenate([c[1:][::-1], c])

    def resonance_ratio(self, k: float) -> float:
        """``min |c_n| / max |c_n|`` over the propagating orders ``|n| <= ceil(kR)``.
        Values near zero signal an interior resonance, where the disk's
        eigensystem misses an order and indicator values become unreliable."""
        orders, c = self.coefficients(k)
        mag = np.abs(c[np.abs(orders) <= int(np.ceil(k * self.radius))])
        return float(mag.min() / mag.max()) if mag.max() > 0 else 0.0


def _penetrable_ratio(k, R, index, nmax, j, h):
    m = k * np.sqrt(complex(index))
    mr = m * R
    kr = k * R
    n = np.arange(nmax + 1)
    ji = special.jv(np.arange(-1, nmax + 1), mr)
    ji_n = ji[1:]
    dji = ji[:-1] - n / mr * ji_n
    jm = np.concatenate([[-j[1]], j[:nmax]])
    hm = np.concatenate([[-h[1]], h[:nmax]])
    dj = jm - n / kr * j[: nmax + 1]
    dh = hm - n / kr * h[: nmax + 1]
    num = k * dj * ji_n - m * j[: nmax + 1] * dji
    den = k * dh * ji_n - m * h[: nmax + 1] * dji
    return num / den


_DISK_PREFACTOR = -np.sqrt(2.0 / np.pi) * np.exp(-0.25j * np.pi)


def disk_farfield(disk: DiskScatterer, d, xhat, k: float, nmax: int | None = None):
    """Far-field pattern ``u^inf(xhat, d)`` of ``disk`` for plane-wave incidence.

    ``d`` and ``xhat`` broadcast against each other (shape ``(..., 2)``).
    """
    d = np.asarray(d, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    orders, c = disk.coefficients(k, nmax)
    dtheta = np.arctan2(xhat[..., 1], xhat[..., 0]) - np.arctan2(d[..., 1], d[..., 0])
    series = np.exp(1j * np.multiply.outer(dtheta, orders)) @ c
    p = np.asarray(disk.center)
    shift = np.exp(1j * k * ((d - xhat) @ p))
    return _DISK_PREFACTOR / np.sqrt(k) * series * shift


def disk_pattern(disk: DiskScatterer, d, angles, k: float, nmax: int | None = None) -> FarFieldPattern:
    """Far-field pattern of a disk on the given observation angles."""
    angles = np.asarray(angles, dtype=float)
    vals = disk_farfield(disk, np.asarray(d, dtype=float), directions(angles), k, nmax)
    return FarFieldPattern(angles, vals, k, meta={"disk": describe_disk(disk)})


def describe_disk(disk: DiskScatterer) -> dict:
    return {"center": list(disk.center), "radius": disk.radius, **disk.kind.describe()}


# ----------------------------------------------------------------- eigensystems

@dataclass(frozen=True)
class Eigensystem:
    """Eigenpairs ``(lambda_n, f_n)`` on a direction grid, orthonormal in the
    ``omega``-weighted inner product; ``lambdas`` are sorted descending."""

    lambdas: np.ndarray
    vectors: np.ndarray
    angles: np.ndarray
    weights: np.ndarray
    orders: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        vec = np.asarray(self.vectors, dtype=complex)
        if vec.ndim != 2 or vec.shape[1] != lam.shape[0] or vec.shape[0] != len(self.angles):
            raise ValueError("eigenvector matrix must be (grid size) x (number of eigenvalues)")
        if np.any(lam < 0):
            raise ValueError("eigenvalues of F_# must be nonnegative")
        order = np.argsort(-lam, kind="stable")
        object.__setattr__(self, "lambdas", lam[order])
        object.__setattr__(self, "vectors", vec[:, order])
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.orders is not None:
            object.__setattr__(self, "orders", np.asarray(self.orders)[order])

    def __len__(self):
        return len(self.lambdas)

    def inner_products(self, data) -> np.ndarray:
        """``(data, f_n)_omega = sum_p omega_p data_p conj(f_n(p))`` for every ``n``."""
        vals = data.values if isinstance(data, FarFieldPattern) else np.asarray(data, dtype=complex)
        if vals.shape[0] != len(self.angles):
            raise ValueError(f"data has {vals.shape[0]} samples, eigensystem grid has {len(self.angles)}")
        return self.vectors.conj().T @ (self.weights * vals)

    def gram(self) -> np.ndarray:
        return self.vectors.conj().T @ (self.weights[:, None] * self.vectors)


def disk_eigensystem(disk: DiskScatterer, angles, k: float, weights=None,
                     nmax: int | None = None) -> Eigensystem:
    """Analytic eigensystem of ``F_#`` for a disk on a full-circle grid.

    ``lambda_n = sqrt(8 pi / k) |c_n|`` and
    ``f_n(theta) = e^{i n theta} e^{-ik P.(cos theta, sin theta)} / sqrt(2 pi)``,
    normalised in the discrete inner product.  Orders are capped below ``L/2``
    so the sampled exponentials stay orthogonal.
    """
    angles = np.asarray(angles, dtype=float)
    if weights is None:
        weights = default_weights(angles)
    weights = np.asarray(weights, dtype=float)
    count = len(angles)
    if nmax is None:
        nmax = series_order(k * disk.radius)
    nmax = min(nmax, (count - 1) // 2)
    orders, c = disk.coefficients(k, nmax)
    lambdas = np.sqrt(8.0 * np.pi / k) * np.abs(c)
    p = np.asarray(disk.center)
    phase = np.exp(-1j * k * (directions(angles) @ p))
    vec = np.exp(1j * np.outer(angles, orders)) * phase[:, None] / np.sqrt(2.0 * np.pi)
    norms = np.sqrt(np.sum(weights[:, None] * np.abs(vec) ** 2, axis=0))
    vec = vec / norms
    return Eigensystem(lambdas, vec, angles, weights, orders,
                       meta={"source": "analytic", "k": k, "disk": describe_disk(disk)})


@dataclass(frozen=True)
class FarFieldMatrix:
    """Samples ``u^inf(xhat_i, d_j)`` on matching observation/incidence grids."""

    entries: np.ndarray
    angles: np.ndarray
    k: float
    weights: np.ndarray = None
    aperture: tuple = (0.0, 2.0 * np.pi)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        ang = np.asarray(self.angles, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"far-field matrix must be square, got shape {a.shape}")
        if a.shape[0] != len(ang):
            raise ValueError("far-field matrix size does not match its direction grid")
        if not np.all(np.isfinite(a)):
            raise ValueError("far-field matrix has non-finite entries")
        w = default_weights(ang) if self.weights is None else np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "aperture", (float(self.aperture[0]), float(self.aperture[1])))

    @property
    def size(self) -> int:
        return len(self.angles)

    def apply(self, g) -> np.ndarray:
        """Quadrature of ``int u^inf(xhat, d) g(d) ds(d)``."""
        return self.entries @ (self.weights * np.asarray(g))

    def __eq__(self, other):
        if not isinstance(other, FarFieldMatrix):
            return NotImplemented
        return (np.array_equal(self.entries, other.entries) and np.array_equal(self.angles, other.angles)
                and np.array_equal(self.weights, other.weights) and self.k == other.k
                and self.aperture == other.aperture)


def farfield_matrix(disk: DiskScatterer, angles, k: float, nmax: int | None = None) -> FarFieldMatrix:
    """Far-field matrix of a disk, ``A[i, j] = u^inf(xhat_i, d_j)``."""
    angles = np.asarray(angles, dtype=float)
    orders, c = disk.coefficients(k, nmax)
    # separable series: A = E diag(c) E^H with E[p, n] = e^{i n theta_p} e^{-ik P.xhat_p}
    phase = np.exp(-1j * k * (directions(angles) @ np.asarray(disk.center)))
    e = np.exp(1j * np.outer(angles, orders)) * phase[:, None]
    entries = (_DISK_PREFACTOR / np.sqrt(k)) * ((e * c) @ e.conj().T)
    return FarFieldMatrix(entries, angles, k, meta={"disk": describe_disk(disk)})


def _hermitian_abs(h: np.ndarray, method: str) -> np.ndarray:
    w, v = hermitian_eigh(h, method)
    return (v * np.abs(w)) @ v.conj().T


def hermitian_eigh(h: np.ndarray, method: str = "auto"):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi or LAPACK."""
    if method == "auto":
        method = "jacobi" if h.shape[0] <= JACOBI_MAX_SIZE else "lapack"
    if method == "jacobi":
        w, v, _ = _backend.jacobi_eigh(h, 1e-12)
        return w, v
    if method == "lapack":
        return np.linalg.eigh(h)
    raise ValueError(f"unknown eigensolver {method!r}")


def fsharp_eigensystem(F: FarFieldMatrix, method: str = "auto") -> Eigensystem:
    """Eigensystem of ``F_# = |Re F| + |Im F|`` in the weighted inner product.

    The operator is symmetrised as ``B = diag(sqrt w) A diag(sqrt w)`` so that
    the weighted adjoint becomes the ordinary conjugate transpose.
    """
    sw = np.sqrt(F.weights)
    b = sw[:, None] * F.entries * sw[None, :]
    re = 0.5 * (b + b.conj().T)
    im = (b - b.conj().T) / 2j
    fs = _hermitian_abs(re, method) + _hermitian_abs(im, method)
    fs = 0.5 * (fs + fs.conj().T)
    w, v = hermitian_eigh(fs, method)
    w = np.clip(w, 0.0, None)  # PSD up to rounding
    return Eigensystem(w, v / sw[:, None], F.angles, F.weights,
                       meta={"source": "numerical", "k": F.k, "method": method, **F.meta})


def disk_fsharp_eigensystem(disk: DiskScatterer, angles, k: float, weights=None,
                            nmax: int | None = None, method: str = "auto") -> Eigensystem:
    """``F_#`` eigensystem of a disk on an arbitrary grid (e.g. an aperture).

    The disk's far-field matrix has rank at most ``2 nmax + 1``; writing
    ``diag(sqrt w) A diag(sqrt w) = Q C Q^H`` with ``Q`` an orthonormal basis of
    its range reduces ``|Re| + |Im|`` to small ``C``-sized problems.  Eigenpairs
    in the orthogonal complement have ``lambda = 0`` and are omitted.
    """
    angles = np.asarray(angles, dtype=float)
    weights = default_weights(angles) if weights is None else np.asarray(weights, dtype=float)
    orders, c = disk.coefficients(k, series_order(k * disk.radius) if nmax is None else nmax)
    phase = np.exp(-1j * k * (directions(angles) @ np.asarray(disk.center)))
    sw = np.sqrt(weights)
    g = np.exp(1j * np.outer(angles, orders)) * (phase * sw)[:, None]
    q, r = np.linalg.qr(g)
    core = (r * ((_DISK_PREFACTOR / np.sqrt(k)) * c)) @ r.conj().T
    re = 0.5 * (core + core.conj().T)
    im = (core - core.conj().T) / 2j
    t = _hermitian_abs(re, method) + _hermitian_abs(im, method)
    w, v = hermitian_eigh(0.5 * (t + t.conj().T), method)
    w = np.clip(w, 0.0, None)
    return Eigensystem(w, (q @ v) / sw[:, None], angles, weights,
                       meta={"source": "lowrank", "k": k, "method": method, "disk": describe_disk(disk)})


def restrict_aperture(F: FarFieldMatrix, start: float, stop: float) -> FarFieldMatrix:
    """``P F P^*`` for the aperture of angles in ``[start, stop]`` (mod 2 pi).

    Rows and columns outside the arc are dropped; the retained directions keep
    their original quadrature weights.
    """
    if stop <= start:
        raise ValueError("aperture must have stop > start")
    if stop - start >= 2.0 * np.pi - 1e-12:
        return F
    rel = np.mod(F.angles - start, 2.0 * np.pi)
    tol = 1e-12
    keep = np.flatnonzero(rel <= (stop - start) + tol)
    if keep.size == 0:
        raise ValueError(f"aperture [{start}, {stop}] contains no grid direction")
    # order the kept directions along the arc, unwrapping past 2 pi
    keep = keep[np.argsort(rel[keep], kind="stable")]
    angles = start + rel[keep]
    return FarFieldMatrix(F.entries[np.ix_(keep, keep)], angles, F.k, F.weights[keep],
                          aperture=(start, stop), meta={**F.meta, "restricted": True})


def restrict_pattern(U: FarFieldPattern, start: float, stop: float) -> FarFieldPattern:
    rel = np.mod(U.angles - start, 2.0 * np.pi)
    keep = np.flatnonzero(rel <= (stop - start) + 1e-12)
    keep = keep[np.argsort(rel[keep], kind="stable")]
    return FarFieldPattern(start + rel[keep], U.values[keep], U.k, U.weights[keep], dict(U.meta))


__all__ = [
    "Dirichlet", "Impedance", "Penetrable", "DiskScatterer", "Eigensystem", "FarFieldMatrix",
    "disk_farfield", "disk_pattern", "disk_eigensystem", "farfield_matrix", "fsharp_eigensystem",
    "disk_fsharp_eigensystem",
    "restrict_aperture", "restrict_pattern", "hermitian_eigh", "kind_from_dict",
]
