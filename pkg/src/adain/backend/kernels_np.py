"""Pure-numpy implementations of the hot kernels.

Fallback used when the compiled extension is unavailable. Same contracts
as ``adain.backend._kernels``; see ``adain.backend`` for selection.
"""

import numpy as np


def im2col(x, kh, kw, stride):
    """Unfold (N,C,H,W) into patch columns (N, C*kh*kw, Ho*Wo).

    Column index k encodes (c, i, j) row-major, matching the layout of a
    flattened (Cout, C, kh, kw) weight tensor.
    """
    n, c, h, w = x.shape
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    cols = np.empty((n, c * kh * kw, ho * wo), dtype=x.dtype)
    view = cols.reshape(n, c, kh, kw, ho, wo)
    for i in range(kh):
        for j in range(kw):
            view[:, :, i, j] = x[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride]
    return cols


def col2im(cols, h, w, kh, kw, stride):
    """Scatter-add patch columns back to (N,C,H,W); adjoint of im2col."""
    n = cols.shape[0]
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    c = cols.shape[1] // (kh * kw)
    view = cols.reshape(n, c, kh, kw, ho, wo)
    x = np.zeros((n, c, h, w), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            x[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += view[:, :, i, j]
    return x


def maxpool_forward(x, k, stride):
    """Windowed max over (N,C,H,W); returns (out, argmax).

    argmax holds flat h*W+w indices into the input plane, first occurrence
    in row-major scan order on ties.
    """
    n, c, h, w = x.shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]  # (N,C,Ho,Wo,k,k)
    flat = windows.reshape(n, c, ho, wo, k * k)
    arg = flat.argmax(axis=4)
    out = np.take_along_axis(flat, arg[..., None], axis=4)[..., 0]
    # window-local argmax -> plane-flat index
    base_h = np.arange(ho)[:, None] * stride
    base_w = np.arange(wo)[None, :] * stride
    abs_h = base_h[None, None] + arg // k
    abs_w = base_w[None, None] + arg % k
    return np.ascontiguousarray(out), (abs_h * w + abs_w).astype(np.int64)


def maxpool_backward(grad, arg, h, w):
    """Route pooled gradients back to their argmax positions."""
    n, c = grad.shape[:2]
    dx = np.zeros((n, c, h * w), dtype=grad.dtype)
    flat_g = grad.reshape(n, c, -1)
    flat_a = arg.reshape(n, c, -1)
    np.add.at(dx, (np.arange(n)[:, None, None], np.arange(c)[None, :, None], flat_a), flat_g)
    return dx.reshape(n, c, h, w)


def _reflect_index(length, pad):
    """Source index in [0, length) for each padded position; mirrors without
    repeating the edge pixel (np.pad mode='reflect')."""
    idx = np.arange(-pad, length + pad)
    period = 2 * (length - 1) if length > 1 else 1
    idx = np.abs(idx) % period
    return np.where(idx >= length, period - idx, idx)


def reflect_pad_backward(grad, pad):
    """Fold gradients of a reflection-padded tensor back onto the source."""
    n, c, hp, wp = grad.shape
    h, w = hp - 2 * pad, wp - 2 * pad
    hi = _reflect_index(h, pad)
    wi = _reflect_index(w, pad)
    # fold as dx = S_h @ grad @ S_w^T with 0/1 summation matrices
    s_h = np.zeros((h, hp), dtype=grad.dtype)
    s_h[hi, np.arange(hp)] = 1
    s_w = np.zeros((w, wp), dtype=grad.dtype)
    s_w[wi, np.arange(wp)] = 1
    return np.matmul(s_h, np.matmul(grad, s_w.T))
