# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same signatures and semantics as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, exp, sqrt, ceil, log2, fmin, fmax

cnp.import_array()

cdef int TAYLOR_ORDER = 12
cdef double SCALE_TARGET = 0.25


cdef inline void _mul(double complex[4] a, double complex[4] b, double complex[4] out) noexcept nogil:
    # out = a @ b, row-major 2x2
    cdef double complex o0 = a[0] * b[0] + a[1] * b[2]
    cdef double complex o1 = a[0] * b[1] + a[1] * b[3]
    cdef double complex o2 = a[2] * b[0] + a[3] * b[2]
    cdef double complex o3 = a[2] * b[1] + a[3] * b[3]
    out[0] = o0
    out[1] = o1
    out[2] = o2
    out[3] = o3


cdef void _expm_i_sigma(double ax, double ay, double az, double complex[4] out) noexcept nogil:
    cdef double norm = sqrt(ax * ax + ay * ay + az * az)
    cdef int squarings = 0
    cdef int k
    cdef double scale
    cdef double complex gen[4]
    cdef double complex term[4]
    if norm > SCALE_TARGET:
        squarings = <int> ceil(log2(norm / SCALE_TARGET))
    scale = 1.0 / (2.0 ** squarings)
    # i a.sigma = [[i az, i ax + ay], [i ax - ay, -i az]]
    gen[0] = 1j * az * scale
    gen[1] = (ay + 1j * ax) * scale
    gen[2] = (-ay + 1j * ax) * scale
    gen[3] = -1j * az * scale
    out[0] = 1.0
    out[1] = 0.0
    out[2] = 0.0
    out[3] = 1.0
    term[0] = 1.0
    term[1] = 0.0
    term[2] = 0.0
    term[3] = 1.0
    for k in range(1, TAYLOR_ORDER + 1):
        _mul(term, gen, term)
        term[0] /= k
        term[1] /= k
        term[2] /= k
        term[3] /= k
        out[0] += term[0]
        out[1] += term[1]
        out[2] += term[2]
        out[3] += term[3]
    for k in range(squarings):
        _mul(out, out, out)


def magnus_product(durations, rates, Py_ssize_t nsteps):
    cdef const double[::1] dur = np.ascontiguousarray(durations, dtype=np.float64)
    cdef const double[:, ::1] rate = np.ascontiguousarray(rates, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t nseg = dur.shape[0]
    cdef Py_ssize_t k, j = 0, jj
    cdef double total = 0.0, dt, t0, t1, seg_start = 0.0, lo, hi, w
    cdef double ax, ay, az
    cdef double complex u[4]
    cdef double complex step[4]
    for jj in range(nseg):
        total += dur[jj]
    result = np.eye(2, dtype=np.complex128)
    if nsteps < 1 or total <= 0.0:
        return result
    dt = total / nsteps
    u[0] = 1.0
    u[1] = 0.0
    u[2] = 0.0
    u[3] = 1.0
    with nogil:
        for k in range(nsteps):
            t0 = k * dt
            t1 = total if k == nsteps - 1 else (k + 1) * dt
            ax = 0.0
            ay = 0.0
            az = 0.0
            # skip segments that end before this step
            while j < nseg - 1 and seg_start + dur[j] <= t0:
                seg_start += dur[j]
                j += 1
            jj = j
            lo = seg_start
            while jj < nseg and lo < t1:
                hi = lo + dur[jj]
                w = fmin(hi, t1) - fmax(lo, t0)
                if w > 0.0:
                    ax += rate[jj, 0] * w
                    ay += rate[jj, 1] * w
                    az += rate[jj, 2] * w
                lo = hi
                jj += 1
            _expm_i_sigma(ax, ay, az, step)
            _mul(step, u, u)
    result[0, 0] = u[0]
    result[0, 1] = u[1]
    result[1, 0] = u[2]
    result[1, 1] = u[3]
    return result


def angle_sum(xy, double px, double py):
    cdef const double[:, ::1] v = np.ascontiguousarray(xy, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double ax, ay, bx, by, total = 0.0
    for i in range(v.shape[0] - 1):
        ax = v[i, 0] - px
        ay = v[i, 1] - py
        bx = v[i + 1, 0] - px
        by = v[i + 1, 1] - py
        total += atan2(ax * by - ay * bx, ax * bx + ay * by)
    return total


def min_distance(xy, double px, double py):
    cdef const double[:, ::1] v = np.ascontiguousarray(xy, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double abx, aby, len2, t, cx, cy, d, best = float("inf")
    for i in range(v.shape[0] - 1):
        abx = v[i + 1, 0] - v[i, 0]
        aby = v[i + 1, 1] - v[i, 1]
        len2 = abx * abx + aby * aby
        t = 0.0
        if len2 > 0.0:
            t = ((px - v[i, 0]) * abx + (py - v[i, 1]) * aby) / len2
            t = fmin(1.0, fmax(0.0, t))
        cx = v[i, 0] + t * abx - px
        cy = v[i, 1] + t * aby - py
        d = sqrt(cx * cx + cy * cy)
        if d < best:
            best = d
    return best


def gauge_line_integral(xy, centers, amps, widths, Py_ssize_t samples):
    cdef const double[:, ::1] v = np.ascontiguousarray(xy, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 2)
    cdef const double[::1] a = np.ascontiguousarray(amps, dtype=np.float64)
    cdef const double[::1] s = np.ascontiguousarray(widths, dtype=np.float64)
    cdef Py_ssize_t i, m, j, nb = a.shape[0]
    cdef double dx, dy, x, y, rx, ry, g, gx, gy, seg, total = 0.0
    if nb == 0:
        return 0.0
    with nogil:
        for i in range(v.shape[0] - 1):
            dx = v[i + 1, 0] - v[i, 0]
            dy = v[i + 1, 1] - v[i, 1]
            seg = 0.0
            for m in range(samples):
                x = v[i, 0] + (m + 0.5) / samples * dx
                y = v[i, 1] + (m + 0.5) / samples * dy
                gx = 0.0
                gy = 0.0
                for j in range(nb):
                    rx = x - c[j, 0]
                    ry = y - c[j, 1]
                    g = a[j] * exp(-(rx * rx + ry * ry) / (2.0 * s[j] * s[j])) / (s[j] * s[j])
                    gx -= g * rx
                    gy -= g * ry
                seg += gx * dx + gy * dy
            total += seg / samples
    return total


def solenoid_line_integral(xy, double px, double py, double flux, Py_ssize_t samples):
    cdef const double[:, ::1] v = np.ascontiguousarray(xy, dtype=np.float64)
    cdef Py_ssize_t i, m
    cdef double dx, dy, x, y, r2, seg, total = 0.0
    with nogil:
        for i in range(v.shape[0] - 1):
            dx = v[i + 1, 0] - v[i, 0]
            dy = v[i + 1, 1] - v[i, 1]
            seg = 0.0
            for m in range(samples):
                x = v[i, 0] + (m + 0.5) / samples * dx - px
                y = v[i, 1] + (m + 0.5) / samples * dy - py
                r2 = x * x + y * y
                seg += (-y * dx + x * dy) / r2
            total += seg / samples
    return flux / (2.0 * 3.141592653589793) * total
