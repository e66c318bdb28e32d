"""Compiled core vs pure-Python kernels.

Run ``python benchmarks/bench_core.py``; prints best-of-N wall times for the
Nystrom kernel assembly and the cyclic Jacobi eigensolver on both backends,
plus an end-to-end forward solve.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from crackinv import _kernels_py
from crackinv.forward import PlaneWave, _log_tables, crack_farfield, full_circle
from crackinv.geometry import GradingParams, PiecewiseLinearCrack, build_mesh

try:
    from crackinv import _core
except ImportError:
    _core = None

CRACK = PiecewiseLinearCrack([(-1, 1), (1, -1), (0, -2)])


def kernel_args(knots_per_segment, k=5.0):
    mesh = build_mesh(CRACK, GradingParams.per_segment(knots_per_segment, CRACK.n_segments))
    R, logsin = _log_tables(mesh.n)
    return (np.ascontiguousarray(mesh.points), np.ascontiguousarray(mesh.tangents),
            np.ascontiguousarray(mesh.wprime), np.ascontiguousarray(mesh.curvature_term), k, R, logsin)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _kernels_py)] + ([("compiled", _core)] if _core is not None else [])
    if _core is None:
        print("compiled core not available; timing the Python kernels only")
    print(f"{'task':<34}{'size':>8}" + "".join(f"{name + ' ms':>12}" for name, _ in backends) + f"{'speedup':>10}")

    for kps in (32, 64, 128):
        a = kernel_args(kps)
        for want_hl, label in ((False, "assemble M"), (True, "assemble M, H, L")):
            times = [best(lambda m=mod: m.assemble_kernels(*a, want_hl), args.repeat) for _, mod in backends]
            row(label, 3 * kps, times)

    rng = np.random.default_rng(0)
    for n in (16, 32, 64):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = x + x.conj().T
        times = [best(lambda m=mod: m.jacobi_eigh(h, 1e-12), args.repeat) for _, mod in backends]
        row("jacobi eigh", n, times)

    t = best(lambda: crack_farfield(CRACK, PlaneWave(5.0, (-1.0, 0.0)), full_circle(800)), args.repeat)
    print(f"{'forward solve + 800 far-field dirs':<34}{192:>8}{t * 1e3:>12.2f}  (active backend)")


def row(label, size, times):
    cells = "".join(f"{t * 1e3:>12.2f}" for t in times)
    speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
    print(f"{label:<34}{size:>8}{cells}{speed}")


if __name__ == "__main__":
    main()
