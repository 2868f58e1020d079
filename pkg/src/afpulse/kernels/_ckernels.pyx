# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def interp_filter(const double[:, ::1] sym, const double[::1] taps, Py_ssize_t mu):
    cdef Py_ssize_t nb = sym.shape[0], k1 = sym.shape[1]
    cdef Py_ssize_t n_taps = taps.shape[0], half = (n_taps - 1) // 2
    cdef Py_ssize_t length = mu * k1
    out_arr = np.zeros((nb, length))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, q, i, i_lo, i_hi, base
    cdef double s
    with nogil:
        for b in range(nb):
            for q in range(k1):
                s = sym[b, q]
                if s == 0.0:
                    continue
                base = mu * q - half
                i_lo = -base if base < 0 else 0
                i_hi = length - 1 - base
                if i_hi > n_taps - 1:
                    i_hi = n_taps - 1
                for i in range(i_lo, i_hi + 1):
                    out[b, base + i] += s * taps[i]
    return out_arr


def fir_same(const double[:, ::1] x, const double[::1] taps):
    cdef Py_ssize_t nb = x.shape[0], n = x.shape[1]
    cdef Py_ssize_t n_taps = taps.shape[0], half = (n_taps - 1) // 2
    out_arr = np.zeros((nb, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, l, i, i_lo, i_hi
    cdef double acc
    with nogil:
        for b in range(nb):
            for l in range(n):
                # input index l + half - i must land in [0, n)
                i_lo = l + half - (n - 1)
                if i_lo < 0:
                    i_lo = 0
                i_hi = l + half
                if i_hi > n_taps - 1:
                    i_hi = n_taps - 1
                acc = 0.0
                for i in range(i_lo, i_hi + 1):
                    acc = acc + taps[i] * x[b, l + half - i]
                out[b, l] = acc
    return out_arr


def decim_filter(const double[:, ::1] x, const double[::1] taps, Py_ssize_t mu, Py_ssize_t n_out):
    cdef Py_ssize_t nb = x.shape[0], n = x.shape[1]
    cdef Py_ssize_t n_taps = taps.shape[0], half = (n_taps - 1) // 2
    out_arr = np.zeros((nb, n_out))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, k, i, i_lo, i_hi, l
    cdef double acc
    with nogil:
        for b in range(nb):
            for k in range(n_out):
                l = mu * k
                i_lo = l + half - (n - 1)
                if i_lo < 0:
                    i_lo = 0
                i_hi = l + half
                if i_hi > n_taps - 1:
                    i_hi = n_taps - 1
                acc = 0.0
                for i in range(i_lo, i_hi + 1):
                    acc = acc + taps[i] * x[b, l + half - i]
                out[b, k] = acc
    return out_arr


def trench_block(const double[::1] x, Py_ssize_t col0, Py_ssize_t h):
    cdef Py_ssize_t n = x.shape[0]
    cdef double x0 = x[0]
    out_arr = np.empty((h, h))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, r, c, d, t
    cdef double acc
    with nogil:
        for i in range(h):
            for j in range(h):
                r = i
                c = col0 + j
                if r > c:
                    r, c = c, r
                d = c - r
                acc = 0.0
                for t in range(r):
                    acc = acc + x[t + 1] * x[d + t + 1] - x[n - 1 - t] * x[n - 1 - d - t]
                out[i, j] = x[d] + acc / x0
    return out_arr
