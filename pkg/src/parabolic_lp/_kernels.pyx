# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py.py`` for the reference twin."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, cos, sin

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef inline double _excess(double u, int n, double[:] yr, double[:] yi,
                           const double[:, :] Vr, const double[:, :] Vi,
                           const double[:] lr, const double[:] li, double* w) noexcept nogil:
    cdef double zr[3]
    cdef double zi[3]
    cdef double er, ei, mag, acc
    cdef int a, b
    for a in range(n):
        mag = exp(-u * lr[a])
        er = mag * cos(u * li[a])
        ei = -mag * sin(u * li[a])
        zr[a] = yr[a] * er - yi[a] * ei
        zi[a] = yr[a] * ei + yi[a] * er
    acc = 0.0
    for a in range(n):
        w[a] = 0.0
        for b in range(n):
            w[a] += Vr[a, b] * zr[b] - Vi[a, b] * zi[b]
        acc += w[a] * w[a]
    return acc - 1.0


def rho_eig(points, Vr, Vi, Wr, Wi, lr, li, P, double tol):
    cdef const double[:, :] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, :] vr = np.ascontiguousarray(Vr, dtype=np.float64)
    cdef const double[:, :] vi = np.ascontiguousarray(Vi, dtype=np.float64)
    cdef const double[:, :] wr = np.ascontiguousarray(Wr, dtype=np.float64)
    cdef const double[:, :] wi = np.ascontiguousarray(Wi, dtype=np.float64)
    cdef const double[:] lamr = np.ascontiguousarray(lr, dtype=np.float64)
    cdef const double[:] lami = np.ascontiguousarray(li, dtype=np.float64)
    cdef const double[:, :] pm = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t m = pts.shape[0]
    cdef int n = pts.shape[1]
    out_arr = np.zeros(m)
    cdef double[:] out = out_arr
    cdef double[:] yr = np.zeros(n)
    cdef double[:] yi = np.zeros(n)
    cdef double w[3]
    cdef double r, u0, lo, hi, f, mid, u, deriv, un, pw
    cdef Py_ssize_t i
    cdef int a, b
    with nogil:
        for i in range(m):
            r = 0.0
            for a in range(n):
                r += pts[i, a] * pts[i, a]
            r = sqrt(r)
            if r < 1e-300:
                out[i] = 0.0
                continue
            for a in range(n):
                yr[a] = 0.0
                yi[a] = 0.0
                for b in range(n):
                    yr[a] += wr[a, b] * pts[i, b]
                    yi[a] += wi[a, b] * pts[i, b]
            u0 = log(r)
            lo = u0
            hi = u0
            f = _excess(u0, n, yr, yi, vr, vi, lamr, lami, w)
            if f > 0:
                while f > 0:
                    lo = hi
                    hi = hi + LN2
                    f = _excess(hi, n, yr, yi, vr, vi, lamr, lami, w)
            else:
                while f <= 0:
                    hi = lo
                    lo = lo - LN2
                    f = _excess(lo, n, yr, yi, vr, vi, lamr, lami, w)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                f = _excess(mid, n, yr, yi, vr, vi, lamr, lami, w)
                if f > 0:
                    lo = mid
                else:
                    hi = mid
            u = 0.5 * (lo + hi)
            f = _excess(u, n, yr, yi, vr, vi, lamr, lami, w)
            deriv = 0.0
            for a in range(n):
                pw = 0.0
                for b in range(n):
                    pw += pm[a, b] * w[b]
                deriv += pw * w[a]
            deriv = -2.0 * deriv
            un = u
            if deriv < 0:
                un = u - f / deriv
                if un < lo or un > hi:
                    un = u
            out[i] = exp(un)
    return out_arr


cdef inline Py_ssize_t _wrap(Py_ssize_t j, Py_ssize_t n) noexcept nogil:
    # offsets lie in [-n/2, n/2), so one correction suffices
    if j < 0:
        return j + n
    if j >= n:
        return j - n
    return j


def ball_averages(values, offs, bounds):
    cdef const double[:, :, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[:, ::1] o = np.ascontiguousarray(offs, dtype=np.int64)
    cdef const long long[::1] bd = np.ascontiguousarray(bounds, dtype=np.int64)
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], n2 = v.shape[2]
    cdef Py_ssize_t nb = bd.shape[0]
    out_arr = np.empty((nb, n0, n1, n2))
    acc_arr = np.zeros((n0, n1, n2))
    cdef double[:, :, :, ::1] out = out_arr
    cdef double[:, :, ::1] acc = acc_arr
    cdef Py_ssize_t i0, i1, i2, k, bi = 0, kmax = bd[nb - 1]
    cdef Py_ssize_t j0, j1, o0, o1, o2
    with nogil:
        # offset-major: each point accumulates in offset order, like the NumPy twin
        for k in range(kmax):
            o0 = o[k, 0] % n0
            o1 = o[k, 1] % n1
            o2 = o[k, 2] % n2
            for i0 in range(n0):
                j0 = _wrap(i0 - o0, n0)
                for i1 in range(n1):
                    j1 = _wrap(i1 - o1, n1)
                    for i2 in range(n2):
                        acc[i0, i1, i2] += v[j0, j1, _wrap(i2 - o2, n2)]
            while bi < nb and bd[bi] == k + 1:
                for i0 in range(n0):
                    for i1 in range(n1):
                        for i2 in range(n2):
                            out[bi, i0, i1, i2] = acc[i0, i1, i2] / (k + 1)
                bi += 1
    return out_arr


def peetre(values, offs, wts):
    cdef const double[:, :, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[:, ::1] o = np.ascontiguousarray(offs, dtype=np.int64)
    cdef const double[::1] wt = np.ascontiguousarray(wts, dtype=np.float64)
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], n2 = v.shape[2]
    cdef Py_ssize_t nk = wt.shape[0]
    out_arr = np.empty((n0, n1, n2))
    cdef double[:, :, ::1] out = out_arr
    cdef double gmax = 0.0, best, val
    cdef Py_ssize_t i0, i1, i2, k, j0, j1, j2
    with nogil:
        for i0 in range(n0):
            for i1 in range(n1):
                for i2 in range(n2):
                    if v[i0, i1, i2] > gmax:
                        gmax = v[i0, i1, i2]
        for i0 in range(n0):
            for i1 in range(n1):
                for i2 in range(n2):
                    best = v[i0, i1, i2] * wt[0]
                    for k in range(1, nk):
                        if wt[k] * gmax <= best:
                            break
                        j0 = _wrap(i0 - o[k, 0] % n0, n0)
                        j1 = _wrap(i1 - o[k, 1] % n1, n1)
                        j2 = _wrap(i2 - o[k, 2] % n2, n2)
                        val = v[j0, j1, j2] * wt[k]
                        if val > best:
                            best = val
                    out[i0, i1, i2] = best
    return out_arr
