# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels; see _kernels_py.py for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log1p

cnp.import_array()

KIND_DISC = 0
KIND_BALL = 1
KIND_POLYDISC = 2
KIND_SIEGEL = 3


cdef inline double _combine(double num, double a) nogil:
    # atanh(sqrt(num / (num + a))) as one log1p:
    # (sqrt(num + a) + sqrt(num)) / sqrt(a) - 1, with sqrt(num + a) - sqrt(a)
    # written as num / (sqrt(num + a) + sqrt(a)) to avoid cancellation
    if num <= 0.0:
        return 0.0
    cdef double sa = sqrt(a)
    cdef double sd = sqrt(num + a)
    return log1p((sqrt(num) + num / (sd + sa)) / sa)


cdef inline double _abs2(double complex c) nogil:
    return c.real * c.real + c.imag * c.imag


cdef double _disc1(double complex z, double complex w) nogil:
    cdef double rz = sqrt(z.real * z.real + z.imag * z.imag)
    cdef double rw = sqrt(w.real * w.real + w.imag * w.imag)
    # per-point factors first so that swapping z and w is exact
    cdef double a = ((1.0 - rz) * (1.0 + rz)) * ((1.0 - rw) * (1.0 + rw))
    return _combine(_abs2(z - w), a)


cdef double _dist_row(int kind, const double complex* z,
                      const double complex* w, Py_ssize_t n) nogil:
    # raw row pointers: slicing memoryviews per row costs more than the arithmetic
    cdef Py_ssize_t j
    cdef double nz2 = 0.0, nw2 = 0.0, d2 = 0.0, best = 0.0, v, num, rz, rw, sz, sw
    cdef double complex cw = 0.0, cz = 0.0, dj
    if kind == 0:
        return _disc1(z[0], w[0])
    if kind == 2:
        for j in range(n):
            v = _disc1(z[j], w[j])
            if v > best:
                best = v
        return best
    if kind == 1:
        # num = |<d,w>|^2 + (1-|w|^2)|d|^2 with d = z - w, averaged with the z-form
        for j in range(n):
            nz2 += _abs2(z[j])
            nw2 += _abs2(w[j])
            dj = z[j] - w[j]
            d2 += _abs2(dj)
            cw += dj * w[j].conjugate()
            cz += dj * z[j].conjugate()
        rz = sqrt(nz2)
        rw = sqrt(nw2)
        sz = (1.0 - rz) * (1.0 + rz)
        sw = (1.0 - rw) * (1.0 + rw)
        num = 0.5 * (_abs2(cw) + _abs2(cz)) + 0.5 * (sw + sz) * d2
        return _combine(num, sz * sw)
    # Siegel domain: num = |d1/2 - <d',w'>|^2 + rho(w)|d'|^2, averaged likewise
    rz = z[0].real
    rw = w[0].real
    cw = 0.5 * (z[0] - w[0])
    cz = cw
    for j in range(1, n):
        rz -= _abs2(z[j])
        rw -= _abs2(w[j])
        dj = z[j] - w[j]
        d2 += _abs2(dj)
        cw -= dj * w[j].conjugate()
        cz -= dj * z[j].conjugate()
    num = 0.5 * (_abs2(cw) + _abs2(cz)) + 0.5 * (rw + rz) * d2
    return _combine(num, rz * rw)


def disc_dist(z, w):
    z_arr, w_arr = np.broadcast_arrays(np.asarray(z, dtype=np.complex128),
                                       np.asarray(w, dtype=np.complex128))
    shape = z_arr.shape
    cdef const double complex[:] zv = np.ascontiguousarray(z_arr).ravel()
    cdef const double complex[:] wv = np.ascontiguousarray(w_arr).ravel()
    cdef Py_ssize_t i, m = zv.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[:] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _disc1(zv[i], wv[i])
    return out.reshape(shape)


def pair_dist(int kind, Z, W):
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    Z, W = np.broadcast_arrays(Z, W)
    cdef const double complex[:, :] zv = np.ascontiguousarray(Z)
    cdef const double complex[:, :] wv = np.ascontiguousarray(W)
    cdef Py_ssize_t i, m = zv.shape[0], n = zv.shape[1]
    out = np.empty(m, dtype=np.float64)
    cdef double[:] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _dist_row(kind, &zv[i, 0], &wv[i, 0], n)
    return out


def ball_dist(Z, W):
    return pair_dist(1, Z, W)


def polydisc_dist(Z, W):
    return pair_dist(2, Z, W)


def siegel_dist(Z, W):
    return pair_dist(3, Z, W)


def window_stats(int kind, W, U, x):
    cdef const double complex[:, :] wv = np.ascontiguousarray(
        np.atleast_2d(np.asarray(W, dtype=np.complex128)))
    cdef const double complex[:, :] uv = np.ascontiguousarray(
        np.atleast_2d(np.asarray(U, dtype=np.complex128)))
    cdef const double complex[:] xv = np.ascontiguousarray(
        np.asarray(x, dtype=np.complex128).ravel())
    cdef Py_ssize_t i, l, m = wv.shape[0], L = uv.shape[0], n = xv.shape[0]
    base = np.empty(L, dtype=np.float64)
    mx = np.empty(m, dtype=np.float64)
    mn = np.empty(m, dtype=np.float64)
    cdef double[:] bv = base
    cdef double[:] mxv = mx
    cdef double[:] mnv = mn
    cdef double d, hi, lo
    with nogil:
        for l in range(L):
            bv[l] = _dist_row(kind, &xv[0], &uv[l, 0], n)
        for i in range(m):
            hi = -1e300
            lo = 1e300
            for l in range(L):
                d = _dist_row(kind, &wv[i, 0], &uv[l, 0], n) - bv[l]
                if d > hi:
                    hi = d
                if d < lo:
                    lo = d
            mxv[i] = hi
            mnv[i] = lo
    return mx, mn
