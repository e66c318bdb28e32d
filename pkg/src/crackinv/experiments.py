"""Experiment configuration, noisy synthetic data and the experiment runner."""
from __future__ import annotations

import ast
import json
import math
import operator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .forward import (FarFieldPattern, PlaneWave, PointSource, SingularSystemError, aperture_angles,
                      crack_farfield, full_circle)
from .geometry import GeometryError, PiecewiseLinearCrack
from .indicators import (IndicatorGrid, circle_centers, contrast_crack,
                         contrast_disk, contrast_point_source_grid, factorization_indicator,
                         indicator_curve, radius_from_curve, default_threshold, support_accumulate,
                         support_count_at)
from .newton import NewtonConfig, reconstruct
from .scatterers import DiskScatterer, fsharp_eigensystem, kind_from_dict

COMMANDS = ("forward", "make-data", "contrast", "factorize", "scan-hull", "newton")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SolverFailure(RuntimeError):
    """A forward or inverse solve failed; partial outputs may exist."""


# ----------------------------------------------------------------- noise

@dataclass
class NoisyFarField:
    """Far-field data perturbed by ``delta (zeta_1 + i zeta_2) |U|`` per sample."""

    base: FarFieldPattern
    delta: float
    seed: int
    values: np.ndarray

    @property
    def pattern(self) -> FarFieldPattern:
        meta = {**self.base.meta, "noise": {"delta": self.delta, "seed": self.seed}}
        return FarFieldPattern(self.base.angles, self.values, self.base.k, self.base.weights, meta)


def noise_generator(seed: int) -> np.random.Generator:
    """PCG64 stream used for all noise draws."""
    return np.random.Generator(np.random.PCG64(seed))


def add_noise(U: FarFieldPattern, delta: float, seed: int = 0) -> NoisyFarField:
    """Multiplicative uniform noise.

    ``zeta_1`` and ``zeta_2`` are drawn as ``2 u - 1`` with ``u`` the 53-bit
    doubles of a PCG64 stream, all ``zeta_1`` first then all ``zeta_2``.
    ``delta = 0`` returns the base values unchanged.
    """
    if not delta >= 0:
        raise ValueError(f"noise level must be nonnegative, got {delta}")
    if delta == 0:
        return NoisyFarField(U, 0.0, seed, U.values.copy())
    rng = noise_generator(seed)
    z1 = 2.0 * rng.random(len(U.values)) - 1.0
    z2 = 2.0 * rng.random(len(U.values)) - 1.0
    vals = U.values + delta * (z1 + 1j * z2) * np.abs(U.values)
    return NoisyFarField(U, float(delta), seed, vals)


# ----------------------------------------------------------------- plot values

def plot_values(values) -> tuple[np.ndarray, bool]:
    """Affine map of ``values`` onto ``[-1, 1]``; a constant input gives zeros and ``True``."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros_like(v), True
    return 2.0 * (v - lo) / (hi - lo) - 1.0, False


def trace_plot_values(total: int) -> np.ndarray:
    """``2 m / total - 1`` for iteration steps ``m = 0..total``."""
    if total < 1:
        raise ValueError("a trace needs at least one step")
    return 2.0 * np.arange(total + 1) / total - 1.0


# ----------------------------------------------------------------- configuration

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}


def _eval_number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_number(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_number(node.left), _eval_number(node.right))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" \
            and len(node.args) == 1:
        return math.sqrt(_eval_number(node.args[0]))
    raise ValueError("unsupported expression")


def number(value, path: str) -> float:
    """A JSON number or an arithmetic string such as ``"5*pi/4"``."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = _eval_number(ast.parse(value, mode="eval").body)
        except (SyntaxError, ValueError, ZeroDivisionError):
            raise ConfigError(path, f"cannot evaluate {value!r}") from None
    else:
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(out):
        raise ConfigError(path, "must be finite")
    return out


def _get(d: dict, key: str, path: str, default=...):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return d[key]


def _points(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty list of [x, y] points")
    out = []
    for i, p in enumerate(value):
        if not isinstance(p, list) or len(p) != 2:
            raise ConfigError(f"{path}[{i}]", "expected [x, y]")
        out.append([number(p[0], f"{path}[{i}][0]"), number(p[1], f"{path}[{i}][1]")])
    return np.array(out)


def _positive(value, path: str) -> float:
    v = number(value, path)
    if not v > 0:
        raise ConfigError(path, "must be positive")
    return v


def _count(value, path: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(path, f"expected an integer >= {minimum}")
    return value


def _grid_axis(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(path, "expected [start, stop, count]")
    lo, hi = number(value[0], f"{path}[0]"), number(value[1], f"{path}[1]")
    return np.linspace(lo, hi, _count(value[2], f"{path}[2]"))


@dataclass
class Observation:
    """Observation directions: ``full`` circle of ``count`` points or an aperture."""

    kind: str
    count: int
    start: float = 0.0
    stop: float = 2.0 * math.pi

    @property
    def angles(self) -> np.ndarray:
        if self.kind == "full":
            return full_circle(self.count)
        return aperture_angles(self.start, self.stop, self.count)

    @property
    def aperture(self):
        return None if self.kind == "full" else (self.start, self.stop)


def _observation(obs_raw, path: str) -> "Observation":
    okind = _get(obs_raw, "kind", path, "full")
    count = _count(_get(obs_raw, "count", path), f"{path}.count", 8)
    if okind == "full":
        return Observation("full", count)
    if okind == "aperture":
        start = number(_get(obs_raw, "start", path), f"{path}.start")
        stop = number(_get(obs_raw, "stop", path), f"{path}.stop")
        if not stop > start or stop - start > 2 * math.pi:
            raise ConfigError(f"{path}.stop", "aperture must satisfy start < stop <= start + 2 pi")
        return Observation("aperture", count, start, stop)
    raise ConfigError(f"{path}.kind", f"unknown kind {okind!r} (full | aperture)")


@dataclass
class ExperimentConfig:
    """Validated experiment description (see ``from_dict`` for the layout)."""

    name: str
    crack: PiecewiseLinearCrack
    incident: object
    observation: Observation
    noise: float = 0.0
    seed: int = 0
    knots_per_segment: int = 64
    data_knots_per_segment: int = 128
    grading_p: float = 3.0
    method: str = "forward"
    blocks: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        name = _get(raw, "name", "", "experiment")
        if not isinstance(name, str) or not name:
            raise ConfigError("name", "expected a non-empty string")
        corners = _points(_get(raw["crack"] if "crack" in raw else raw, "corners", "crack"), "crack.corners")
        try:
            crack = PiecewiseLinearCrack(corners)
        except GeometryError as exc:
            raise ConfigError("crack.corners", str(exc)) from None
        inc = _get(raw, "incident", "")
        k = _positive(_get(inc, "k", "incident"), "incident.k")
        kind = _get(inc, "kind", "incident", "plane_wave")
        if kind == "plane_wave":
            d = _points([_get(inc, "direction", "incident")], "incident.direction")[0]
            norm = math.hypot(*d)
            if norm == 0:
                raise ConfigError("incident.direction", "must be nonzero")
            incident = PlaneWave(k, tuple(d / norm))
        elif kind == "point_source":
            y = _points([_get(inc, "source", "incident")], "incident.source")[0]
            if crack.distance(y)[0] == 0:
                raise ConfigError("incident.source", "source lies on the crack")
            incident = PointSource(k, tuple(y))
        else:
            raise ConfigError("incident.kind", f"unknown kind {kind!r} (plane_wave | point_source)")
        obs = _observation(_get(raw, "observation", ""), "observation")
        data = _get(raw, "data", "", {})
        noise = number(_get(data, "noise", "data", 0.0), "data.noise")
        if noise < 0:
            raise ConfigError("data.noise", "must be nonnegative")
        seed = _count(_get(data, "seed", "data", 0), "data.seed", 0)
        solver = _get(raw, "solver", "", {})
        kps = _count(_get(solver, "knots_per_segment", "solver", 64), "solver.knots_per_segment", 2)
        dkps = _count(_get(data, "knots_per_segment", "data", 2 * kps), "data.knots_per_segment", 2)
        p = number(_get(solver, "grading_p", "solver", 3.0), "solver.grading_p")
        if p < 2:
            raise ConfigError("solver.grading_p", "must be at least 2")
        for path, v in (("solver.knots_per_segment", kps), ("data.knots_per_segment", dkps)):
            if (v * crack.n_segments) % 2:
                raise ConfigError(path, "total knot count must be even")
        method = _get(raw, "method", "", "forward")
        if method not in COMMANDS:
            raise ConfigError("method", f"unknown method {method!r}; expected one of {', '.join(COMMANDS)}")
        blocks = {key: raw[key] for key in ("contrast", "factorization", "hull", "newton") if key in raw}
        cfg = cls(name, crack, incident, obs, noise, seed, kps, dkps, p, method, blocks,
                  Path(base_dir) if base_dir is not None else Path.cwd(), raw)
        cfg.validate_blocks()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read configuration ({exc.strerror})") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(raw, path.parent)

    def validate_blocks(self) -> None:
        """Parse every method block once so errors surface before any solve."""
        for key in self.blocks:
            getattr(self, f"{key}_settings")()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = json.loads(json.dumps(self.raw))
        raw.setdefault("data", {})["seed"] = seed
        return ExperimentConfig.from_dict(raw, self.base_dir)

    @property
    def angles(self) -> np.ndarray:
        return self.observation.angles

    def block(self, key: str) -> dict:
        if key not in self.blocks:
            raise ConfigError(key, "missing method block for this command")
        b = self.blocks[key]
        if not isinstance(b, dict):
            raise ConfigError(key, "expected an object")
        return b

    # -------------------------------------------------- method blocks

    def contrast_settings(self) -> dict:
        b = self.block("contrast")
        kind = _get(b, "indicator", "contrast")
        out = {"indicator": kind}
        if kind == "crack":
            if "shifts" in b:
                out["shifts"] = _points(b["shifts"], "contrast.shifts")
            else:
                vals = _get(b, "shift_values", "contrast")
                if not isinstance(vals, list) or not vals:
                    raise ConfigError("contrast.shift_values", "expected a non-empty list")
                v = [number(x, f"contrast.shift_values[{i}]") for i, x in enumerate(vals)]
                out["shifts"] = np.array([(a1, a2) for a2 in v for a1 in v])
        elif kind in ("point_source", "disk"):
            g = _get(b, "grid", "contrast")
            out["xs"] = _grid_axis(_get(g, "x", "contrast.grid"), "contrast.grid.x")
            out["ys"] = _grid_axis(_get(g, "y", "contrast.grid"), "contrast.grid.y")
            if kind == "point_source":
                tau = _get(b, "tau", "contrast", 1.0)
                if isinstance(tau, list):
                    if len(tau) != 2:
                        raise ConfigError("contrast.tau", "expected [re, im]")
                    tau = complex(number(tau[0], "contrast.tau[0]"), number(tau[1], "contrast.tau[1]"))
                else:
                    tau = complex(number(tau, "contrast.tau"))
                if tau == 0:
                    raise ConfigError("contrast.tau", "must be nonzero")
                out["tau"] = tau
            else:
                out["radius"] = _positive(_get(b, "radius", "contrast"), "contrast.radius")
                out["boundary"] = self._boundary(_get(b, "boundary", "contrast", {"kind": "dirichlet"}),
                                                 "contrast.boundary")
        else:
            raise ConfigError("contrast.indicator", f"unknown indicator {kind!r} (crack | point_source | disk)")
        return out

    def _boundary(self, spec, path):
        if not isinstance(spec, dict):
            raise ConfigError(path, "expected an object")
        try:
            return kind_from_dict(spec, self.incident.k)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(path, str(exc)) from None

    def _radii(self, b: dict, path: str) -> tuple[np.ndarray, np.ndarray]:
        r = _get(b, "radii", path)
        if isinstance(r, dict):
            lo = _count(_get(r, "m_start", f"{path}.radii"), f"{path}.radii.m_start")
            hi = _count(_get(r, "m_stop", f"{path}.radii"), f"{path}.radii.m_stop")
            if hi <= lo:
                raise ConfigError(f"{path}.radii.m_stop", "must exceed m_start")
            scale = _positive(_get(r, "scale", f"{path}.radii"), f"{path}.radii.scale")
            m = np.arange(lo, hi + 1)
            return m, np.round(m * scale, 12)
        if not isinstance(r, list) or len(r) < 1:
            raise ConfigError(f"{path}.radii", "expected a list or {m_start, m_stop, scale}")
        radii = np.array([_positive(x, f"{path}.radii[{i}]") for i, x in enumerate(r)])
        if np.any(np.diff(radii) <= 0):
            raise ConfigError(f"{path}.radii", "must be strictly increasing")
        return np.arange(1, len(radii) + 1), radii

    def _centers(self, b: dict, path: str) -> np.ndarray:
        c = _get(b, "centers", path)
        if isinstance(c, dict):
            ring = _get(c, "circle", f"{path}.centers")
            radius = _positive(_get(ring, "radius", f"{path}.centers.circle"), f"{path}.centers.circle.radius")
            count = _count(_get(ring, "count", f"{path}.centers.circle"), f"{path}.centers.circle.count")
            return circle_centers(radius, count)
        return _points(c, f"{path}.centers")

    def factorization_settings(self) -> dict:
        b = self.block("factorization")
        out = {"alpha": None, "eps": None}
        alpha = _get(b, "alpha", "factorization", 1e-8)
        if alpha is not None:
            out["alpha"] = _positive(alpha, "factorization.alpha")
        eps = _get(b, "eps", "factorization", None)
        if eps is not None:
            out["eps"] = _positive(eps, "factorization.eps")
        out["method"] = _get(b, "eigensolver", "factorization", "auto")
        if out["method"] not in ("auto", "jacobi", "lapack"):
            raise ConfigError("factorization.eigensolver", "expected auto | jacobi | lapack")
        if "external_matrices" in b:
            mats = b["external_matrices"]
            if not isinstance(mats, list) or not mats:
                raise ConfigError("factorization.external_matrices", "expected a non-empty list of paths")
            out["external"] = [self.base_dir / str(m) for m in mats]
            return out
        out["centers"] = self._centers(b, "factorization")
        out["m"], out["radii"] = self._radii(b, "factorization")
        out["boundary"] = _get(b, "test_body", "factorization", {"kind": "impedance"})
        self._boundary(out["boundary"], "factorization.test_body")
        return out

    def hull_settings(self) -> dict:
        b = self.block("hull")
        f = self.factorization_settings() if "factorization" in self.blocks else {}
        out = {"alpha": _positive(_get(b, "alpha", "hull", f.get("alpha") or 1e-8), "hull.alpha")}
        eps = _get(b, "eps", "hull", f.get("eps"))
        out["eps"] = None if eps is None else _positive(eps, "hull.eps")
        out["centers"] = self._centers(b, "hull")
        out["m"], out["radii"] = self._radii(b, "hull")
        out["boundary"] = _get(b, "test_body", "hull", {"kind": "impedance"})
        self._boundary(out["boundary"], "hull.test_body")
        g = _get(b, "grid", "hull")
        out["xs"] = _grid_axis(_get(g, "x", "hull.grid"), "hull.grid.x")
        out["ys"] = _grid_axis(_get(g, "y", "hull.grid"), "hull.grid.y")
        out["pad"] = number(_get(b, "pad", "hull", 0.0), "hull.pad")
        return out

    def newton_settings(self) -> dict:
        b = self.block("newton")
        init = _points(_get(b, "initial", "newton"), "newton.initial")
        try:
            initial = PiecewiseLinearCrack(init)
        except GeometryError as exc:
            raise ConfigError("newton.initial", str(exc)) from None
        obs = _observation(b["observation"], "newton.observation") if "observation" in b else self.observation
        try:
            cfg = NewtonConfig(alpha=number(_get(b, "alpha", "newton", 10.0), "newton.alpha"),
                               alpha0=number(_get(b, "alpha0", "newton", 1e-2), "newton.alpha0"),
                               max_iters=_count(_get(b, "iterations", "newton", 10), "newton.iterations"),
                               knots_per_segment=self.knots_per_segment, grading_p=self.grading_p,
                               tangential=bool(_get(b, "tangential", "newton", True)))
        except ValueError as exc:
            raise ConfigError("newton", str(exc)) from None
        truth = _get(b, "truth_known", "newton", True)
        return {"initial": initial, "config": cfg, "angles": obs.angles, "report_error": bool(truth)}


# ----------------------------------------------------------------- runner

@dataclass
class RunResult:
    command: str
    out_dir: Path
    artifacts: list
    summary: dict
    partial: bool = False
    error: str | None = None


class _Run:
    def __init__(self, config: ExperimentConfig, out_dir: Path, threads: int):
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = max(1, int(threads))
        self.artifacts: list[str] = []
        self.summary: dict = {}

    def record(self, *paths):
        for p in paths:
            self.artifacts.append(Path(p).name)

    def map(self, fn, items):
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(fn, items))

    def farfield(self, angles=None, knots=None) -> FarFieldPattern:
        c = self.config
        angles = c.angles if angles is None else angles
        return crack_farfield(c.crack, c.incident, angles, knots or c.data_knots_per_segment, c.grading_p)

    def data(self, angles=None, write: bool = True) -> FarFieldPattern:
        c = self.config
        U = self.farfield(angles)
        U.meta.update({"incident": c.incident.describe(), "aperture": list(c.observation.aperture or ())})
        noisy = add_noise(U, c.noise, c.seed).pattern
        if write:
            self.record(*io.write_farfield(noisy, self.out / "data"))
        return noisy


def _cmd_forward(run: _Run):
    c = run.config
    U = run.farfield(knots=c.knots_per_segment)
    U.meta.update({"incident": c.incident.describe(), "knots_per_segment": c.knots_per_segment})
    run.record(*io.write_farfield(U, run.out / "farfield"))
    run.summary["max_abs"] = float(np.max(np.abs(U.values)))


def _cmd_make_data(run: _Run):
    c = run.config
    U = run.farfield()
    U.meta.update({"incident": c.incident.describe(), "knots_per_segment": c.data_knots_per_segment})
    run.record(*io.write_farfield(U, run.out / "farfield_clean"))
    noisy = add_noise(U, c.noise, c.seed)
    run.record(*io.write_farfield(noisy.pattern, run.out / "data"))
    run.summary["noise"] = {"delta": c.noise, "seed": c.seed,
                            "max_relative_perturbation": float(np.max(
                                np.abs(noisy.values - U.values) / np.where(U.values == 0, 1, np.abs(U.values))))}


def _emit_grid(run: _Run, grid: IndicatorGrid, stem: str):
    pv, flat = plot_values(grid.values)
    run.record(*io.write_indicator(grid, run.out / stem, extra={"plot_value": pv}))
    return flat


def _cmd_contrast(run: _Run):
    c = run.config
    s = c.contrast_settings()
    U = run.data()
    if s["indicator"] == "crack":
        def one(a):
            return (tuple(a), crack_farfield(c.crack.translated(a), c.incident, c.angles,
                                             c.knots_per_segment, c.grading_p))
        grid = contrast_crack(U, run.map(one, s["shifts"]))
    else:
        gx, gy = np.meshgrid(s["xs"], s["ys"])
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        if s["indicator"] == "point_source":
            grid = contrast_point_source_grid(U, pts, s["tau"])
        else:
            if not isinstance(c.incident, PlaneWave):
                raise ConfigError("contrast.indicator", "disk contrast needs plane-wave incidence")
            grid = contrast_disk(U, pts, s["radius"], c.incident.direction, s["boundary"])
    flat = _emit_grid(run, grid, "indicator")
    best = grid.samples[grid.argmax()]
    run.summary.update({"indicator": s["indicator"], "argmax": [float(x) for x in best],
                        "constant_grid": flat})


def _scan_curves(run: _Run, U, centers, radii, boundary, alpha):
    c = run.config
    aperture = c.observation.aperture
    if aperture is not None:
        # aperture data: data and test eigensystems both live on the aperture grid
        aperture = (float(U.angles[0]), float(U.angles[-1]))

    def factory(k):
        return kind_from_dict(boundary, k)

    def one(center):
        return indicator_curve(U, center, radii, factory, alpha, aperture)
    return np.array(run.map(one, list(centers)))


def _curve_grid(centers, m, radii, curves, meta) -> tuple[IndicatorGrid, dict]:
    rows = [(cx, cy, r) for (cx, cy) in centers for r in radii]
    grid = IndicatorGrid(("p1", "p2", "radius"), np.array(rows), curves.ravel(), meta)
    extra = {"m": np.tile(m, len(centers))}
    return grid, extra


def _cmd_factorize(run: _Run):
    c = run.config
    s = c.factorization_settings()
    U = run.data()
    if "external" in s:
        rows, vals = [], []
        for i, path in enumerate(s["external"]):
            try:
                F = io.read_farfield_matrix(path, c.incident.k)
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"factorization.external_matrices[{i}]", str(exc)) from None
            if not np.allclose(F.angles, U.angles):
                raise ConfigError(f"factorization.external_matrices[{i}]",
                                  "matrix directions differ from the observation grid")
            eig = fsharp_eigensystem(F, s["method"])
            rows.append([float(i)])
            vals.append(factorization_indicator(U, eig, s["alpha"]))
        grid = IndicatorGrid(("matrix",), np.array(rows), np.array(vals),
                             {"indicator": "factorization", "alpha": s["alpha"],
                              "matrices": [p.name for p in s["external"]]})
        _emit_grid(run, grid, "indicator")
        run.summary["values"] = [float(v) for v in vals]
        return
    curves = _scan_curves(run, U, s["centers"], s["radii"], s["boundary"], s["alpha"])
    grid, extra = _curve_grid(s["centers"], s["m"], s["radii"], curves,
                              {"indicator": "factorization", "alpha": s["alpha"], "k": c.incident.k})
    pv, _ = plot_values(grid.values)
    extra["plot_value"] = pv
    run.record(*io.write_indicator(grid, run.out / "indicator_curve", extra))
    results = []
    for center, vals in zip(s["centers"], curves):
        eps = s["eps"] if s["eps"] is not None else default_threshold(vals)
        r_p, flagged = radius_from_curve(s["radii"], vals, eps)
        results.append({"center": [float(x) for x in center], "eps": eps, "r_p": r_p, "flagged": flagged})
    run.summary["scans"] = results
    kind = kind_from_dict(s["boundary"], c.incident.k)
    ratios = [DiskScatterer((0.0, 0.0), r, kind).resonance_ratio(c.incident.k) for r in s["radii"]]
    run.summary["min_resonance_ratio"] = float(min(ratios))


def _cmd_scan_hull(run: _Run):
    c = run.config
    s = c.hull_settings()
    U = run.data()
    curves = _scan_curves(run, U, s["centers"], s["radii"], s["boundary"], s["alpha"])
    grid, extra = _curve_grid(s["centers"], s["m"], s["radii"], curves,
                              {"indicator": "factorization", "alpha": s["alpha"], "k": c.incident.k})
    run.record(*io.write_indicator(grid, run.out / "indicator_curves", extra))
    r_p, flags, eps_used = [], [], []
    for vals in curves:
        eps = s["eps"] if s["eps"] is not None else default_threshold(vals)
        r, f = radius_from_curve(s["radii"], vals, eps)
        r_p.append(r + s["pad"] if not f else 0.0)
        flags.append(f)
        eps_used.append(eps)
    r_p = np.array(r_p)
    cx, cy = s["centers"][:, 0], s["centers"][:, 1]
    run.record(io.write_table_csv(("p1", "p2", "r_p", "flagged", "eps"),
                                  (cx, cy, r_p, np.array(flags), np.array(eps_used)), run.out / "radii.csv"))
    counts = support_accumulate(s["centers"], r_p, s["xs"], s["ys"])
    run.record(io.write_count_field_csv(s["xs"], s["ys"], counts, run.out / "support_count.csv"))
    top = int(counts.max())
    iy, ix = np.nonzero(counts == top)
    run.summary.update({
        "max_count": top, "centers": len(r_p),
        "max_region_bbox": [float(s["xs"][ix].min()), float(s["ys"][iy].min()),
                            float(s["xs"][ix].max()), float(s["ys"][iy].max())],
        "corner_counts": [int(v) for v in support_count_at(s["centers"], r_p, c.crack.corners)],
    })


def _cmd_newton(run: _Run):
    c = run.config
    s = c.newton_settings()
    U = run.data(s["angles"])
    trace = reconstruct(s["initial"], U, c.incident, s["config"])
    (run.out / "trace.json").write_text(trace.to_json() + "\n")
    (run.out / "trace.csv").write_text(trace.to_csv())
    run.record(run.out / "trace.json", run.out / "trace.csv")
    if len(trace):
        steps = np.array([r.step for r in trace.records])
        colors = trace_plot_values(s["config"].max_iters)[steps]
        run.record(io.write_table_csv(("step", "plot_value", "residual"),
                                      (steps, colors, trace.residuals), run.out / "trace_colors.csv"))
        final = np.asarray(trace.records[-1].corners)
        run.summary["final_corners"] = final.tolist()
        run.summary["residuals"] = [float(r) for r in trace.residuals]
        if s["report_error"] and final.shape == c.crack.corners.shape:
            run.summary["max_corner_error"] = float(np.max(np.hypot(*(final - c.crack.corners).T)))
    if not trace.completed:
        raise SolverFailure(trace.error or "Newton iteration failed")


_COMMANDS = {"forward": _cmd_forward, "make-data": _cmd_make_data, "contrast": _cmd_contrast,
             "factorize": _cmd_factorize, "scan-hull": _cmd_scan_hull, "newton": _cmd_newton}


def run_experiment(config: ExperimentConfig, out_dir, command: str | None = None,
                   threads: int = 1) -> RunResult:
    """Run ``command`` (default: the config's ``method``) and write artifacts to ``out_dir``.

    A ``run.json`` summary is always written.  Solver failures produce a
    partial summary and raise ``SolverFailure`` afterwards.
    """
    command = command or config.method
    if command not in _COMMANDS:
        raise ConfigError("method", f"unknown command {command!r}")
    run = _Run(config, Path(out_dir), threads)
    error = None
    try:
        _COMMANDS[command](run)
    except ConfigError:
        raise
    except (SolverFailure, SingularSystemError, np.linalg.LinAlgError, GeometryError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    summary = {"name": config.name, "command": command, "status": "partial" if error else "ok",
               "partial": error is not None, "error": error, "seed": config.seed, "noise": config.noise,
               "artifacts": sorted(set(run.artifacts)), "results": run.summary}
    io.write_json(summary, run.out / "run.json")
    result = RunResult(command, run.out, sorted(set(run.artifacts)), summary, error is not None, error)
    if error:
        raise SolverFailure(error)
    return result


__all__ = [
    "COMMANDS", "ConfigError", "SolverFailure", "NoisyFarField", "noise_generator", "add_noise",
    "plot_values", "trace_plot_values", "number", "Observation", "ExperimentConfig", "RunResult",
    "run_experiment",
]
