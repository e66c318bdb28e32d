"""Pure numpy implementations of the hot kernels.

Same signatures as the compiled ``_core`` extension; used when the extension
is unavailable or ``CRACKINV_PURE_PYTHON=1`` is set.
"""
from __future__ import annotations

import numpy as np
from scipy import special

EULER_GAMMA = 0.5772156649015329


def assemble_kernels(pts, tang, wprime, curv, k, R, logsin, want_hl):
    """Nystrom matrices of the single layer (M) and, optionally, of the
    normal-derivative (H) and double-layer (L) operators.

    Every kernel is split as ``K1(s, sigma) ln(4 sin^2((s - sigma)/2)) + K2``;
    the log part is integrated with the weights ``R`` and the smooth part
    with the trapezoidal weight ``pi/n``.
    """
    m = len(wprime)
    n = m // 2
    h = np.pi / n
    speed = np.hypot(tang[:, 0], tang[:, 1])
    dx = pts[None, :, 0] - pts[:, None, 0]  # x1(tau_j) - x1(t_i)
    dy = pts[None, :, 1] - pts[:, None, 1]
    r = np.hypot(dx, dy)
    off = ~np.eye(m, dtype=bool)
    r_safe = np.where(off, r, 1.0)
    kr = k * r_safe
    j0 = special.j0(kr)
    y0 = special.y0(kr)
    ls = logsin
    diag = np.arange(m)

    m1 = -j0 * speed[None, :] / (2 * np.pi)
    full = 0.5j * (j0 + 1j * y0) * speed[None, :]
    m2 = full - m1 * ls
    m1[diag, diag] = -speed / (2 * np.pi)
    m2[diag, diag] = (0.5j - EULER_GAMMA / np.pi - np.log(0.5 * k * speed) / np.pi) * speed \
        + 2 * m1[diag, diag] * np.log(wprime)
    M = R * m1 + h * m2
    if not want_hl:
        return M, None, None

    j1 = special.j1(kr)
    y1 = special.y1(kr)
    h1 = j1 + 1j * y1
    cross_t = tang[:, 1][:, None] * dx - tang[:, 0][:, None] * dy
    cross_tau = tang[None, :, 1] * dx - tang[None, :, 0] * dy
    curv_h = curv / (2 * np.pi * speed)
    curv_l = -curv / (2 * np.pi * speed ** 2)

    hk1 = -(k / (2 * np.pi)) * cross_t * j1 / r_safe * speed[None, :]
    hk = 0.5j * k * cross_t * h1 / r_safe * speed[None, :]
    hk2 = hk - hk1 * ls
    hk1[diag, diag] = 0.0
    hk2[diag, diag] = curv_h
    H = R * hk1 + h * hk2

    lk1 = (k / (2 * np.pi)) * cross_tau * j1 / r_safe
    lk = -0.5j * k * cross_tau * h1 / r_safe
    lk2 = lk - lk1 * ls
    lk1[diag, diag] = 0.0
    lk2[diag, diag] = curv_l
    L = R * lk1 + h * lk2
    return M, H, L


def _round_robin(m):
    """Pairings of a round-robin tournament on ``m`` (even) players."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        half = m // 2
        rounds.append((np.array(players[:half]), np.array(players[half:][::-1])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, tol=1e-12, max_sweeps=60):
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Rotations are applied in round-robin order so that each round touches
    disjoint index pairs and can be vectorised.  Returns ``(w, V, sweeps)``
    with ``A = V diag(w) V^*``; eigenvalues are unsorted.
    """
    a = np.array(A, dtype=complex)
    m = a.shape[0]
    v = np.eye(m, dtype=complex)
    if m == 1:
        return a.real.diagonal().copy(), v, 0
    pad = m % 2
    if pad:
        a = np.pad(a, ((0, 1), (0, 1)))
        v = np.pad(v, ((0, 1), (0, 1)))
        v[m, m] = 1.0
    size = a.shape[0]
    rounds = _round_robin(size)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(m), np.eye(m, dtype=complex), 0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            sweeps -= 1
            break
        for p, q in rounds:
            apq = a[p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not np.any(active):
                continue
            app = a[p, p].real
            aqq = a[q, q].real
            phase = np.where(active, apq / np.where(active, mag, 1.0), 1.0)
            theta = np.where(active, (aqq - app) / (2.0 * np.where(active, mag, 1.0)), 0.0)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ph = np.conj(phase)  # column q is scaled by e^{-i phi}
            # columns: A <- A J
            colp = a[:, p].copy()
            colq = a[:, q].copy()
            a[:, p] = c * colp - (s * ph) * colq
            a[:, q] = s * colp + (c * ph) * colq
            # rows: A <- J^* A
            rowp = a[p, :].copy()
            rowq = a[q, :].copy()
            a[p, :] = c[:, None] * rowp - (s * np.conj(ph))[:, None] * rowq
            a[q, :] = s[:, None] * rowp + (c * np.conj(ph))[:, None] * rowq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q].copy()
            v[:, p] = c * vp - (s * ph) * vq
            v[:, q] = s * vp + (c * ph) * vq
    else:
        raise np.linalg.LinAlgError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    w = a.diagonal().real.copy()
    if pad:
        keep = np.argsort(np.abs(v[m, :]))[:m]
        keep.sort()
        return w[keep], v[:m, keep], sweeps
    return w, v, sweeps
