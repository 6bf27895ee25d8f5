# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the convolution inner loops.

Mirrors ``reference`` exactly; see that module for the contract. The sparse
and Winograd-domain kernels skip zero filter taps outright, which is the
whole point of pruning at deployment.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv2d(double[:, :, :, ::1] x, double[:, :, :, ::1] w):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], wid = x.shape[3]
    cdef Py_ssize_t d = w.shape[0], r = w.shape[2], s = w.shape[3]
    cdef Py_ssize_t oh = h - r + 1, ow = wid - s + 1
    out_arr = np.zeros((b, d, oh, ow), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t ib, id_, ic, iu, iv, p, q
    cdef double tap, acc
    for ib in range(b):
        for id_ in range(d):
            for ic in range(c):
                for iu in range(r):
                    for iv in range(s):
                        tap = w[id_, ic, iu, iv]
                        if tap == 0.0:
                            continue
                        for p in range(oh):
                            for q in range(ow):
                                out[ib, id_, p, q] += tap * x[ib, ic, p + iu, q + iv]
    return out_arr


def conv2d_input_grad(double[:, :, :, ::1] gy, double[:, :, :, ::1] w):
    cdef Py_ssize_t b = gy.shape[0], d = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t c = w.shape[1], r = w.shape[2], s = w.shape[3]
    cdef Py_ssize_t h = oh + r - 1, wid = ow + s - 1
    out_arr = np.zeros((b, c, h, wid), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t ib, id_, ic, iu, iv, p, q
    cdef double tap
    # Scatter form of the forward loop: each output-grad pixel feeds the r x s
    # input window it was computed from.
    for ib in range(b):
        for id_ in range(d):
            for ic in range(c):
                for iu in range(r):
                    for iv in range(s):
                        tap = w[id_, ic, iu, iv]
                        if tap == 0.0:
                            continue
                        for p in range(oh):
                            for q in range(ow):
                                out[ib, ic, p + iu, q + iv] += tap * gy[ib, id_, p, q]
    return out_arr


def conv2d_weight_grad(double[:, :, :, ::1] x, double[:, :, :, ::1] gy):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], wid = x.shape[3]
    cdef Py_ssize_t d = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t r = h - oh + 1, s = wid - ow + 1
    out_arr = np.zeros((d, c, r, s), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t ib, id_, ic, iu, iv, p, q
    cdef double acc
    for id_ in range(d):
        for ic in range(c):
            for iu in range(r):
                for iv in range(s):
                    acc = 0.0
                    for ib in range(b):
                        for p in range(oh):
                            for q in range(ow):
                                acc += gy[ib, id_, p, q] * x[ib, ic, p + iu, q + iv]
                    out[id_, ic, iu, iv] = acc
    return out_arr


def winograd_domain_product(double[:, :, :, :, ::1] xt, double[:, :, :, ::1] wt):
    cdef Py_ssize_t b = xt.shape[0], t = xt.shape[1], c = xt.shape[2], n = xt.shape[3]
    cdef Py_ssize_t d = wt.shape[0]
    out_arr = np.zeros((b, t, d, n, n), dtype=np.float64)
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t ib, it, id_, ic, i, j
    cdef double tap
    for id_ in range(d):
        for ic in range(c):
            for i in range(n):
                for j in range(n):
                    tap = wt[id_, ic, i, j]
                    if tap == 0.0:
                        continue
                    for ib in range(b):
                        for it in range(t):
                            out[ib, it, id_, i, j] += tap * xt[ib, it, ic, i, j]
    return out_arr


def sparse_conv2d(
    double[:, :, :, ::1] x,
    cnp.int64_t[::1] out_ch,
    cnp.int64_t[::1] in_ch,
    cnp.int64_t[::1] row,
    cnp.int64_t[::1] col,
    double[::1] val,
    Py_ssize_t num_filters,
    Py_ssize_t r,
):
    cdef Py_ssize_t b = x.shape[0], h = x.shape[2], wid = x.shape[3]
    cdef Py_ssize_t oh = h - r + 1, ow = wid - r + 1
    out_arr = np.zeros((b, num_filters, oh, ow), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t k, ib, p, q, d, c, u, v
    cdef double a
    for k in range(val.shape[0]):
        d = out_ch[k]
        c = in_ch[k]
        u = row[k]
        v = col[k]
        a = val[k]
        for ib in range(b):
            for p in range(oh):
                for q in range(ow):
                    out[ib, d, p, q] += a * x[ib, c, p + u, q + v]
    return out_arr
