# Compiled hot kernels: patch unfolding for convolution, pooling with argmax
# routing, and reflection-pad gradient folding. Contracts match kernels_np.

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

ctypedef fused real:
    float
    double


def im2col(const real[:, :, :, ::1] x, Py_ssize_t kh, Py_ssize_t kw, Py_ssize_t stride):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = (h - kh) // stride + 1
    cdef Py_ssize_t wo = (w - kw) // stride + 1
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.empty((n, c * kh * kw, ho * wo), dtype=dtype)
    cdef real[:, :, ::1] cols = out_arr
    cdef Py_ssize_t b, ch, i, j, oh, ow, row
    for b in range(n):
        for ch in range(c):
            for i in range(kh):
                for j in range(kw):
                    row = (ch * kh + i) * kw + j
                    for oh in range(ho):
                        for ow in range(wo):
                            cols[b, row, oh * wo + ow] = x[b, ch, oh * stride + i, ow * stride + j]
    return out_arr


def col2im(const real[:, :, ::1] cols, Py_ssize_t h, Py_ssize_t w, Py_ssize_t kh, Py_ssize_t kw, Py_ssize_t stride):
    cdef Py_ssize_t n = cols.shape[0]
    cdef Py_ssize_t ho = (h - kh) // stride + 1
    cdef Py_ssize_t wo = (w - kw) // stride + 1
    cdef Py_ssize_t c = cols.shape[1] // (kh * kw)
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((n, c, h, w), dtype=dtype)
    cdef real[:, :, :, ::1] x = out_arr
    cdef Py_ssize_t b, ch, i, j, oh, ow, row
    for b in range(n):
        for ch in range(c):
            for i in range(kh):
                for j in range(kw):
                    row = (ch * kh + i) * kw + j
                    for oh in range(ho):
                        for ow in range(wo):
                            x[b, ch, oh * stride + i, ow * stride + j] += cols[b, row, oh * wo + ow]
    return out_arr


def maxpool_forward(const real[:, :, :, ::1] x, Py_ssize_t k, Py_ssize_t stride):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = (h - k) // stride + 1
    cdef Py_ssize_t wo = (w - k) // stride + 1
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.empty((n, c, ho, wo), dtype=dtype)
    arg_arr = np.empty((n, c, ho, wo), dtype=np.int64)
    cdef real[:, :, :, ::1] out = out_arr
    cdef cnp.int64_t[:, :, :, ::1] arg = arg_arr
    cdef Py_ssize_t b, ch, oh, ow, i, j, bh, bw, best_idx
    cdef real v, best
    for b in range(n):
        for ch in range(c):
            for oh in range(ho):
                for ow in range(wo):
                    bh = oh * stride
                    bw = ow * stride
                    best = x[b, ch, bh, bw]
                    best_idx = bh * w + bw
                    for i in range(k):
                        for j in range(k):
                            v = x[b, ch, bh + i, bw + j]
                            if v > best:
                                best = v
                                best_idx = (bh + i) * w + (bw + j)
                    out[b, ch, oh, ow] = best
                    arg[b, ch, oh, ow] = best_idx
    return out_arr, arg_arr


def maxpool_backward(const real[:, :, :, ::1] grad, const cnp.int64_t[:, :, :, ::1] arg, Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t n = grad.shape[0], c = grad.shape[1]
    cdef Py_ssize_t ho = grad.shape[2], wo = grad.shape[3]
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((n, c, h * w), dtype=dtype)
    cdef real[:, :, ::1] dx = out_arr
    cdef Py_ssize_t b, ch, oh, ow
    for b in range(n):
        for ch in range(c):
            for oh in range(ho):
                for ow in range(wo):
                    dx[b, ch, arg[b, ch, oh, ow]] += grad[b, ch, oh, ow]
    return out_arr.reshape(n, c, h, w)


def reflect_pad_backward(const real[:, :, :, ::1] grad, Py_ssize_t pad):
    cdef Py_ssize_t n = grad.shape[0], c = grad.shape[1]
    cdef Py_ssize_t hp = grad.shape[2], wp = grad.shape[3]
    cdef Py_ssize_t h = hp - 2 * pad, w = wp - 2 * pad
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((n, c, h, w), dtype=dtype)
    cdef real[:, :, :, ::1] dx = out_arr
    cdef cnp.int64_t[::1] hi = _reflect_index(h, pad)
    cdef cnp.int64_t[::1] wi = _reflect_index(w, pad)
    cdef Py_ssize_t b, ch, i, j
    for b in range(n):
        for ch in range(c):
            for i in range(hp):
                for j in range(wp):
                    dx[b, ch, hi[i], wi[j]] += grad[b, ch, i, j]
    return out_arr


def _reflect_index(Py_ssize_t length, Py_ssize_t pad):
    idx = np.abs(np.arange(-pad, length + pad))
    period = 2 * (length - 1) if length > 1 else 1
    idx = idx % period
    return np.where(idx >= length, period - idx, idx).astype(np.int64)
