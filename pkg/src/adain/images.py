"""Image loading/saving and pixel-space preprocessing.

Images are (1,3,H,W) float tensors in [0,1], RGB. File I/O is 8-bit PNG
or JPEG. Resizing is classic bilinear with half-pixel centers so results
are reproducible across implementations; luminance work happens in
BT.601 YCbCr.
"""

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import DimensionError
from .tensor import Tensor

# BT.601 full-range RGB -> YCbCr; inverse derived numerically
_RGB_TO_YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.299 / 1.772, -0.587 / 1.772, 0.886 / 1.772],
        [0.701 / 1.402, -0.587 / 1.402, -0.114 / 1.402],
    ]
)
_YCC_TO_RGB = np.linalg.inv(_RGB_TO_YCC)


def as_image(array, dtype=np.float32):
    """Wrap an (H,W,3), (3,H,W) or (1,3,H,W) array as an image tensor."""
    arr = np.asarray(array, dtype=dtype)
    if arr.ndim == 3 and arr.shape[2] == 3:
        arr = arr.transpose(2, 0, 1)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[0] != 1 or arr.shape[1] != 3:
        raise DimensionError(f"image must be (1,3,H,W), got {arr.shape}")
    return Tensor(np.clip(arr, 0.0, 1.0))


def check_image(img):
    if img.data.ndim != 4 or img.data.shape[0] != 1 or img.data.shape[1] != 3:
        raise DimensionError(f"expected image shape (1,3,H,W), got {img.data.shape}")
    return img


def _check_format(pil):
    if pil.format not in ("PNG", "JPEG"):
        raise OSError(f"unsupported image format {pil.format!r}; only PNG and JPEG are accepted")


def load_image(path):
    """Read a PNG/JPEG as RGB in [0,1]; grayscale is replicated, alpha dropped."""
    with PILImage.open(path) as pil:
        _check_format(pil)
        rgb = pil.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    if arr.size == 0:
        raise OSError(f"degenerate image: {path}")
    return as_image(arr)


def save_image(img, path):
    """Clamp to [0,1], quantize with round-half-up, write 8-bit."""
    check_image(img)
    arr = np.clip(img.data[0].transpose(1, 2, 0), 0.0, 1.0)
    quant = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    PILImage.fromarray(quant, mode="RGB").save(path)


def image_to_png_bytes(img):
    import io

    check_image(img)
    arr = np.clip(img.data[0].transpose(1, 2, 0), 0.0, 1.0)
    quant = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(quant, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_image_bytes(blob):
    import io

    with PILImage.open(io.BytesIO(blob)) as pil:
        _check_format(pil)
        rgb = pil.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return as_image(arr)


def load_mask(path_or_bytes):
    """Grayscale mask in [0,1], shape (H,W); PNG only."""
    import io

    source = io.BytesIO(path_or_bytes) if isinstance(path_or_bytes, (bytes, bytearray)) else path_or_bytes
    with PILImage.open(source) as pil:
        if pil.format != "PNG":
            raise OSError(f"masks must be grayscale PNG, got {pil.format!r}")
        gray = pil.convert("L")
        return np.asarray(gray, dtype=np.float32) / 255.0


def _bilinear_axis_indices(out_len, in_len):
    """Half-pixel-center source coordinates split into (lo, hi, frac)."""
    src = (np.arange(out_len) + 0.5) * (in_len / out_len) - 0.5
    src = np.clip(src, 0.0, in_len - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_len - 1)
    frac = (src - lo).astype(np.float32)
    return lo, hi, frac


def resize_bilinear(img, out_h, out_w):
    check_image(img)
    _, _, h, w = img.data.shape
    if (h, w) == (out_h, out_w):
        return img
    ylo, yhi, yf = _bilinear_axis_indices(out_h, h)
    xlo, xhi, xf = _bilinear_axis_indices(out_w, w)
    data = img.data[0]
    top = data[:, ylo][:, :, xlo] * (1 - xf) + data[:, ylo][:, :, xhi] * xf
    bot = data[:, yhi][:, :, xlo] * (1 - xf) + data[:, yhi][:, :, xhi] * xf
    out = top * (1 - yf[None, :, None]) + bot * yf[None, :, None]
    return Tensor(np.ascontiguousarray(out[None], dtype=img.data.dtype))


def resize_smallest_side(img, target):
    """Scale so the smallest spatial dim equals ``target``, preserving aspect."""
    check_image(img)
    if target < 1:
        raise DimensionError(f"target must be >= 1, got {target}")
    _, _, h, w = img.data.shape
    if h == 0 or w == 0:
        raise DimensionError("degenerate zero-pixel image")
    smallest = min(h, w)
    scale = target / smallest
    new_h = target if h == smallest else int(np.floor(h * scale + 0.5))
    new_w = target if w == smallest else int(np.floor(w * scale + 0.5))
    return resize_bilinear(img, new_h, new_w)


def random_crop(img, size, rng):
    """size x size window at offsets drawn uniformly from the valid range."""
    check_image(img)
    _, _, h, w = img.data.shape
    if h < size or w < size:
        raise DimensionError(f"image {h}x{w} smaller than crop {size}")
    top = int(rng.integers(0, h - size + 1))
    left = int(rng.integers(0, w - size + 1))
    return Tensor(img.data[:, :, top : top + size, left : left + size].copy())


def rgb_to_ycbcr(arr):
    """(3,H,W) RGB -> YCbCr with chroma offset +0.5."""
    flat = arr.reshape(3, -1)
    ycc = _RGB_TO_YCC @ flat
    ycc[1:] += 0.5
    return ycc.reshape(arr.shape)


def ycbcr_to_rgb(arr):
    flat = arr.reshape(3, -1).copy()
    flat[1:] -= 0.5
    return (_YCC_TO_RGB @ flat).reshape(arr.shape)


def equalize_luminance(img):
    """Histogram-equalize the Y channel (256-bin CDF map); chroma untouched.

    Each pixel maps to the CDF value of its bin, so a constant image maps
    to a single value and an already-uniform histogram barely moves.
    """
    check_image(img)
    ycc = rgb_to_ycbcr(img.data[0].astype(np.float64))
    y = np.clip(ycc[0], 0.0, 1.0)
    bins = np.floor(y * 255.0 + 0.5).astype(np.int64)
    hist = np.bincount(bins.reshape(-1), minlength=256)
    cdf = np.cumsum(hist) / bins.size
    ycc[0] = cdf[bins]
    rgb = np.clip(ycbcr_to_rgb(ycc), 0.0, 1.0)
    return Tensor(rgb[None].astype(img.data.dtype, copy=False))


def _sym_sqrt(mat, inverse=False):
    vals, vecs = np.linalg.eigh(mat)
    vals = np.maximum(vals, 0.0)
    root = np.sqrt(vals)
    if inverse:
        root = 1.0 / root
    return (vecs * root) @ vecs.T


def color_match(style, content, regularize=1e-5):
    """Linear transform aligning style's RGB mean/covariance to content's.

    s' = A (s - mu_s) + mu_c with A = cov_c^{1/2} cov_s^{-1/2} via symmetric
    eigendecomposition. A near-singular style covariance regularizes both
    covariances with +regularize*I. Output is clamped to [0,1]; pre-clamp
    the mean equals the content mean.
    """
    check_image(style)
    check_image(content)
    s = style.data[0].reshape(3, -1).astype(np.float64)
    c = content.data[0].reshape(3, -1).astype(np.float64)
    mu_s = s.mean(axis=1, keepdims=True)
    mu_c = c.mean(axis=1, keepdims=True)
    cov_s = np.cov(s, bias=True)
    cov_c = np.cov(c, bias=True)
    if np.linalg.eigvalsh(cov_s).min() < 1e-8:
        cov_s = cov_s + regularize * np.eye(3)
        cov_c = cov_c + regularize * np.eye(3)
    transform = _sym_sqrt(cov_c) @ _sym_sqrt(cov_s, inverse=True)
    out = transform @ (s - mu_s) + mu_c
    out = np.clip(out, 0.0, 1.0).reshape(style.data[0].shape)
    return Tensor(out[None].astype(style.data.dtype, copy=False))
