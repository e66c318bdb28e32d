# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Nystrom matrix assembly and cyclic Jacobi."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, log, fabs, M_PI
from scipy.special.cython_special cimport j0 as _j0, y0 as _y0, j1 as _j1, y1 as _y1

cnp.import_array()

cdef double EULER_GAMMA = 0.5772156649015329


def assemble_kernels(const double[:, ::1] pts, const double[:, ::1] tang, const double[::1] wprime,
                     const double[::1] curv, double k, const double[:, ::1] R, const double[:, ::1] logsin,
                     bint want_hl):
    cdef Py_ssize_t m = wprime.shape[0]
    cdef Py_ssize_t i, j
    cdef double h = M_PI / (m // 2)
    cdef double dx, dy, r, kr, vj0, vy0, vj1, vy1, ls, k1, cross_t, cross_tau
    cdef double complex full, hank1
    cdef double[::1] speed = np.empty(m)
    M_arr = np.empty((m, m), dtype=np.complex128)
    cdef double complex[:, ::1] M = M_arr
    cdef double complex[:, ::1] H
    cdef double complex[:, ::1] L
    H_arr = None
    L_arr = None
    if want_hl:
        H_arr = np.empty((m, m), dtype=np.complex128)
        L_arr = np.empty((m, m), dtype=np.complex128)
        H = H_arr
        L = L_arr
    for i in range(m):
        speed[i] = hypot(tang[i, 0], tang[i, 1])
    for i in range(m):
        for j in range(m):
            if i == j:
                k1 = -speed[i] / (2 * M_PI)
                M[i, i] = R[i, i] * k1 + h * (
                    (0.5j - EULER_GAMMA / M_PI - log(0.5 * k * speed[i]) / M_PI) * speed[i]
                    + 2 * k1 * log(wprime[i]))
                if want_hl:
                    H[i, i] = h * curv[i] / (2 * M_PI * speed[i])
                    L[i, i] = -h * curv[i] / (2 * M_PI * speed[i] * speed[i])
                continue
            dx = pts[j, 0] - pts[i, 0]
            dy = pts[j, 1] - pts[i, 1]
            r = hypot(dx, dy)
            kr = k * r
            ls = logsin[i, j]
            vj0 = _j0(kr)
            vy0 = _y0(kr)
            k1 = -vj0 * speed[j] / (2 * M_PI)
            full = 0.5j * (vj0 + 1j * vy0) * speed[j]
            M[i, j] = R[i, j] * k1 + h * (full - k1 * ls)
            if want_hl:
                vj1 = _j1(kr)
                vy1 = _y1(kr)
                hank1 = vj1 + 1j * vy1
                cross_t = tang[i, 1] * dx - tang[i, 0] * dy
                cross_tau = tang[j, 1] * dx - tang[j, 0] * dy
                k1 = -(k / (2 * M_PI)) * cross_t * vj1 / r * speed[j]
                full = 0.5j * k * cross_t * hank1 / r * speed[j]
                H[i, j] = R[i, j] * k1 + h * (full - k1 * ls)
                k1 = (k / (2 * M_PI)) * cross_tau * vj1 / r
                full = -0.5j * k * cross_tau * hank1 / r
                L[i, j] = R[i, j] * k1 + h * (full - k1 * ls)
    return M_arr, H_arr, L_arr


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def jacobi_eigh(A, double tol=1e-12, int max_sweeps=60):
    """Row-cyclic Jacobi eigendecomposition of a Hermitian matrix."""
    a_arr = np.array(A, dtype=np.complex128, order="C")
    cdef Py_ssize_t m = a_arr.shape[0]
    v_arr = np.eye(m, dtype=np.complex128)
    cdef double complex[:, ::1] a = a_arr
    cdef double complex[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, r
    cdef int sweep = 0
    cdef double off, scale = 0.0, mag, app, aqq, theta, t, c, s
    cdef double complex phase, ph, cph, xp, xq
    for p in range(m):
        for q in range(m):
            scale += cabs2(a[p, q])
    scale = sqrt(scale)
    if m <= 1 or scale == 0.0:
        return a_arr.diagonal().real.copy(), v_arr, 0
    while True:
        off = 0.0
        for p in range(m):
            for q in range(m):
                if p != q:
                    off += cabs2(a[p, q])
        if sqrt(off) <= tol * scale:
            break
        if sweep >= max_sweeps:
            raise np.linalg.LinAlgError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
        sweep += 1
        for p in range(m - 1):
            for q in range(p + 1, m):
                mag = sqrt(cabs2(a[p, q]))
                if mag <= 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = a[p, q] / mag
                theta = (aqq - app) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                ph = phase.conjugate()
                cph = phase
                for r in range(m):
                    xp = a[r, p]
                    xq = a[r, q]
                    a[r, p] = c * xp - s * ph * xq
                    a[r, q] = s * xp + c * ph * xq
                for r in range(m):
                    xp = a[p, r]
                    xq = a[q, r]
                    a[p, r] = c * xp - s * cph * xq
                    a[q, r] = s * xp + c * cph * xq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for r in range(m):
                    xp = v[r, p]
                    xq = v[r, q]
                    v[r, p] = c * xp - s * ph * xq
                    v[r, q] = s * xp + c * ph * xq
    return a_arr.diagonal().real.copy(), v_arr, sweep
