"""Regularized Newton reconstruction of crack corners from far-field data."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .forward import (DEFAULT_KNOTS_PER_SEGMENT, DensitySolution, FarFieldPattern, assemble_system,
                      directions, farfield_values, solve_density)
from .geometry import GeometryError, GradingParams, PiecewiseLinearCrack, build_mesh
from .specfun import farfield_constant

CANDIDATE_TAGS = ("++", "+-", "-+", "--")


@dataclass
class NewtonConfig:
    """Parameters of the regularized Newton iteration."""

    alpha: float = 10.0
    alpha0: float = 1e-2
    max_iters: int = 10
    knots_per_segment: int = DEFAULT_KNOTS_PER_SEGMENT
    grading_p: float = 3.0
    max_halvings: int = 8
    tangential: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.alpha0 > 0:
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")


def _solve(crack: PiecewiseLinearCrack, incident, config: NewtonConfig) -> DensitySolution:
    params = GradingParams.per_segment(config.knots_per_segment, crack.n_segments, config.grading_p)
    return solve_density(build_mesh(crack, params), incident)


# ----------------------------------------------------------------- Frechet derivative

def normal_derivative_trace(sol: DensitySolution, H=None):
    """``(W V_+, W V_-)``: grading-weighted two-sided normal derivatives.

    ``V_pm = 2 d_nu U_pm`` at the knots; computed as
    ``D^{-1} [(W H -+ D)(W Psi) + W D Y]`` without ever dividing by ``W``.
    """
    mesh = sol.mesh
    if H is None:
        _, H, _ = assemble_system(mesh, sol.k, with_derivatives=True)
    w = mesh.wprime
    speed = mesh.speed
    grad = sol.incident.gradient(mesh.points)
    y = 2.0 * np.sum(grad * mesh.normals, axis=-1)
    core = w * (H @ sol.wpsi) / speed + w * y
    return core - sol.wpsi, core + sol.wpsi


@dataclass
class FrechetOperator:
    """Linearization of the corners-to-far-field map at one crack.

    Holds the factorized jump-system matrix so that many perturbations (the
    Jacobian columns) share one factorization.
    """

    sol: DensitySolution
    alpha0: float
    wv_plus: np.ndarray
    wv_minus: np.ndarray
    L: np.ndarray
    A: np.ndarray
    chol: tuple

    @classmethod
    def build(cls, sol: DensitySolution, alpha0: float = 1e-2) -> "FrechetOperator":
        if not alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        mesh = sol.mesh
        _, H, L = assemble_system(mesh, sol.k, with_derivatives=True)
        wvp, wvm = normal_derivative_trace(sol, H)
        A = mesh.wprime[:, None] * sol.matrix
        normal = alpha0 * np.eye(mesh.size) + A.conj().T @ A
        chol = sla.cho_factor(normal)
        return cls(sol, alpha0, wvp, wvm, L, A, chol)

    def normal_component(self, deltas) -> np.ndarray:
        """Knot values ``nu . q`` of the piecewise-linear perturbation ``deltas``."""
        deltas = np.asarray(deltas, dtype=float)
        mesh = self.sol.mesh
        if deltas.shape != (mesh.crack.n_segments + 1, 2):
            raise ValueError(f"perturbation must have shape {(mesh.crack.n_segments + 1, 2)}")
        f = mesh.frac[:, None]
        q = (1.0 - f) * deltas[mesh.segment] + f * deltas[mesh.segment + 1]
        return np.sum(q * mesh.normals, axis=1)

    def jump_densities(self, qn):
        """``(W X_1, W X_2)`` for knot values ``qn`` of ``nu . q`` (columns allowed)."""
        qn = np.asarray(qn)
        single = qn.ndim == 1
        qn = qn[:, None] if single else qn
        w = self.sol.mesh.wprime[:, None]
        wx1 = qn * ((self.wv_minus - self.wv_plus) / 2.0)[:, None]
        rhs = w * (self.L @ wx1) + wx1 + qn * self.wv_plus[:, None]
        wx2 = sla.cho_solve(self.chol, self.A.conj().T @ rhs)
        if single:
            return wx1[:, 0], wx2[:, 0]
        return wx1, wx2

    def farfield_matrix(self, dirs) -> tuple[np.ndarray, np.ndarray]:
        """Row operators mapping ``W X_1`` and ``W X_2`` to ``v^inf``."""
        mesh = self.sol.mesh
        k = self.sol.k
        gamma = farfield_constant(k)
        h = (np.pi / mesh.n) * mesh.speed
        phase = np.exp(-1j * k * (dirs @ mesh.points.T)) * h[None, :]
        dl = gamma * (-1j * k) * phase * (dirs @ mesh.normals.T)
        sl = -gamma * phase
        return dl, sl

    def apply(self, deltas, angles) -> np.ndarray:
        """``v^inf`` on ``angles`` for the corner perturbation ``deltas``."""
        wx1, wx2 = self.jump_densities(self.normal_component(deltas))
        dl, sl = self.farfield_matrix(directions(np.asarray(angles, dtype=float)))
        return dl @ wx1 + sl @ wx2

    def jacobian(self, angles) -> np.ndarray:
        """Columns ``[P_{0,1} .. P_{N,1}, P_{0,2} .. P_{N,2}]`` of the derivative."""
        mesh = self.sol.mesh
        ncorner = mesh.crack.n_segments + 1
        hats = np.zeros((mesh.size, ncorner))
        idx = np.arange(mesh.size)
        hats[idx, mesh.segment] = 1.0 - mesh.frac
        hats[idx, mesh.segment + 1] = mesh.frac
        qn = np.hstack([hats * mesh.normals[:, :1], hats * mesh.normals[:, 1:]])
        wx1, wx2 = self.jump_densities(qn)
        dl, sl = self.farfield_matrix(directions(np.asarray(angles, dtype=float)))
        return dl @ wx1 + sl @ wx2


def frechet_farfield(sol: DensitySolution, deltas, angles, alpha0: float = 1e-2) -> FarFieldPattern:
    """Far-field pattern ``v^inf`` of the Frechet derivative in direction ``deltas``."""
    op = FrechetOperator.build(sol, alpha0)
    angles = np.asarray(angles, dtype=float)
    return FarFieldPattern(angles, op.apply(deltas, angles), sol.k, meta={"derivative": True})


def assemble_jacobian(sol: DensitySolution, angles, alpha0: float = 1e-2) -> np.ndarray:
    """Complex Jacobian ``(len(angles), 2 (N + 1))`` of corners to far field."""
    return FrechetOperator.build(sol, alpha0).jacobian(angles)


# ----------------------------------------------------------------- Newton update

def newton_step(residual, jacobian, alpha: float, weights=None) -> np.ndarray:
    """Real Tikhonov update ``(alpha I + J^* J)^{-1} J^* r``.

    The adjoint is taken in ``L^2`` of the aperture (quadrature ``weights``),
    and real/imaginary parts are stacked so the corner update is real.
    Returns the ``(N + 1, 2)`` corner deltas.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    J = np.asarray(jacobian, dtype=complex)
    r = np.asarray(residual, dtype=complex)
    sw = np.ones(len(r)) if weights is None else np.sqrt(np.asarray(weights, dtype=float))
    A = np.vstack([(sw[:, None] * J).real, (sw[:, None] * J).imag])
    b = np.concatenate([(sw * r).real, (sw * r).imag])
    normal = alpha * np.eye(A.shape[1]) + A.T @ A
    x = sla.solve(normal, A.T @ b, assume_a="pos")
    ncorner = J.shape[1] // 2
    return np.column_stack([x[:ncorner], x[ncorner:]])


def normal_equation_residual(residual, jacobian, alpha, deltas, weights=None) -> float:
    """Relative residual of the Tikhonov normal equations for ``deltas``."""
    J = np.asarray(jacobian, dtype=complex)
    r = np.asarray(residual, dtype=complex)
    sw = np.ones(len(r)) if weights is None else np.sqrt(np.asarray(weights, dtype=float))
    A = np.vstack([(sw[:, None] * J).real, (sw[:, None] * J).imag])
    b = np.concatenate([(sw * r).real, (sw * r).imag])
    x = np.concatenate([deltas[:, 0], deltas[:, 1]])
    lhs = alpha * x + A.T @ (A @ x)
    rhs = A.T @ b
    scale = max(np.linalg.norm(rhs), np.linalg.norm(lhs), 1e-300)
    return float(np.linalg.norm(lhs - rhs) / scale)


def step_length(deltas) -> float:
    """``l_m``: root-mean-square corner displacement."""
    deltas = np.asarray(deltas, dtype=float)
    return float(np.sqrt(np.sum(deltas ** 2) / len(deltas)))


def tip_candidates(corners, length: float):
    """The four tip-shifted candidates in tie-break order ``++, +-, -+, --``.

    Invalid candidates (degenerate or self-intersecting) are returned as
    ``None``.
    """
    c = np.asarray(corners, dtype=float)
    t0 = c[1] - c[0]
    t0 = t0 / np.hypot(*t0)
    tn = c[-1] - c[-2]
    tn = tn / np.hypot(*tn)
    out = []
    for tag in CANDIDATE_TAGS:
        s0 = 1.0 if tag[0] == "+" else -1.0
        sn = 1.0 if tag[1] == "+" else -1.0
        new = c.copy()
        new[0] = c[0] + s0 * length * t0
        new[-1] = c[-1] + sn * length * tn
        try:
            cand = PiecewiseLinearCrack(new)
            if len(c) == 2 and np.dot(new[1] - new[0], c[1] - c[0]) <= 0:
                raise GeometryError("tip crossed its neighbour")
            if len(c) > 2 and (np.dot(new[1] - new[0], t0) <= 0 or np.dot(new[-1] - new[-2], tn) <= 0):
                raise GeometryError("tip crossed its neighbour corner")
        except GeometryError:
            cand = None
        out.append((tag, cand))
    return out


@dataclass
class TangentialChoice:
    crack: PiecewiseLinearCrack
    tag: str
    residual: float
    pattern: FarFieldPattern
    residuals: dict


def tangential_update(corners, length: float, data: FarFieldPattern, incident,
                      config: NewtonConfig | None = None) -> TangentialChoice:
    """Pick the tip-shifted candidate with the smallest ``L^2`` data misfit."""
    config = config or NewtonConfig()
    best = None
    residuals = {}
    for tag, cand in tip_candidates(corners, length):
        if cand is None:
            residuals[tag] = None
            continue
        pattern = _pattern(cand, incident, data, config)
        res = data.norm(pattern)
        residuals[tag] = res
        if best is None or res < best.residual:
            best = TangentialChoice(cand, tag, res, pattern, residuals)
    if best is None:
        raise GeometryError("all tangential candidates are degenerate")
    best.residuals = residuals
    return best


def _pattern(crack, incident, data: FarFieldPattern, config: NewtonConfig) -> FarFieldPattern:
    sol = _solve(crack, incident, config)
    vals = farfield_values(sol.mesh, sol.k, sol.wpsi, data.directions)
    return FarFieldPattern(data.angles, vals, sol.k, data.weights)


@dataclass
class IterateRecord:
    step: int
    corners: list
    residual: float
    candidate: str
    halvings: int = 0


@dataclass
class IterateTrace:
    """Corners, data residual and chosen tip candidate per Newton step."""

    records: list = field(default_factory=list)
    completed: bool = True
    error: str | None = None

    def __len__(self):
        return len(self.records)

    @property
    def corners(self) -> list:
        return [np.asarray(r.corners) for r in self.records]

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def final(self) -> PiecewiseLinearCrack:
        return PiecewiseLinearCrack(self.records[-1].corners)

    def to_json(self) -> str:
        return json.dumps({"completed": self.completed, "error": self.error,
                           "steps": [asdict(r) for r in self.records]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "IterateTrace":
        obj = json.loads(text)
        recs = [IterateRecord(**r) for r in obj["steps"]]
        return cls(recs, obj["completed"], obj["error"])

    def to_csv(self) -> str:
        lines = ["step,corner,x,y,residual,candidate,halvings"]
        for r in self.records:
            for i, (x, y) in enumerate(r.corners):
                lines.append(f"{r.step},{i},{x!r},{y!r},{r.residual!r},{r.candidate},{r.halvings}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, IterateTrace):
            return NotImplemented
        return (self.completed == other.completed and self.error == other.error
                and [asdict(r) for r in self.records] == [asdict(r) for r in other.records])


def _apply_update(corners, deltas, max_halvings):
    """Corner update; halves the step until the crack is valid again."""
    for halvings in range(max_halvings + 1):
        try:
            return PiecewiseLinearCrack(corners + deltas), deltas, halvings
        except GeometryError:
            deltas = 0.5 * deltas
    raise GeometryError("corner update stays degenerate after halving")


def reconstruct(initial: PiecewiseLinearCrack, data: FarFieldPattern, incident,
                config: NewtonConfig | None = None, callback=None) -> IterateTrace:
    """Run ``config.max_iters`` Newton steps with tangential tip updates."""
    config = config or NewtonConfig()
    crack = initial
    trace = IterateTrace()
    try:
        pattern = _pattern(crack, incident, data, config)
    except Exception as exc:  # noqa: BLE001 - reported through the trace
        trace.completed = False
        trace.error = f"{type(exc).__name__}: {exc}"
        return trace
    trace.records.append(IterateRecord(0, crack.corners.tolist(), data.norm(pattern), "initial"))
    for step in range(1, config.max_iters + 1):
        try:
            sol = _solve(crack, incident, config)
            op = FrechetOperator.build(sol, config.alpha0)
            J = op.jacobian(data.angles)
            res = data.values - farfield_values(sol.mesh, sol.k, sol.wpsi, data.directions)
            deltas = newton_step(res, J, config.alpha, data.weights)
            updated, deltas, halvings = _apply_update(crack.corners, deltas, config.max_halvings)
            if config.tangential:
                choice = tangential_update(updated.corners, step_length(deltas), data, incident, config)
                crack, residual, tag = choice.crack, choice.residual, choice.tag
            else:
                crack = updated
                residual = data.norm(_pattern(crack, incident, data, config))
                tag = "none"
        except Exception as exc:  # noqa: BLE001 - partial trace on solver failure
            trace.completed = False
            trace.error = f"{type(exc).__name__}: {exc}"
            break
        trace.records.append(IterateRecord(step, crack.corners.tolist(), residual, tag, halvings))
        if callback is not None:
            callback(trace.records[-1])
    return trace


def max_corner_error(corners, truth) -> float:
    a = np.asarray(corners, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise ValueError("corner lists differ in length")
    return float(np.max(np.hypot(*(a - b).T)))


def hausdorff_to_polyline(corners, truth: PiecewiseLinearCrack, samples: int = 200) -> float:
    """Symmetric Hausdorff distance between two polylines (sampled)."""
    a = PiecewiseLinearCrack(corners)
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    pa, _ = a.parametrize(t)
    pb, _ = truth.parametrize(t)
    pa = np.vstack([pa, a.corners[-1]])
    pb = np.vstack([pb, truth.corners[-1]])
    return float(max(truth.distance(pa).max(), a.distance(pb).max()))


__all__ = [
    "NewtonConfig", "normal_derivative_trace", "FrechetOperator", "frechet_farfield",
    "assemble_jacobian", "newton_step", "normal_equation_residual", "step_length", "tip_candidates",
    "tangential_update", "TangentialChoice", "IterateRecord", "IterateTrace", "reconstruct",
    "max_corner_error", "hausdorff_to_polyline", "CANDIDATE_TAGS",
]
