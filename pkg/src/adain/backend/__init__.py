"""Kernel backend selection.

The convolution patch kernels, pooling, and pad-gradient folding exist
twice: a compiled Cython extension (``_kernels``) and a pure-numpy
fallback (``kernels_np``). The compiled one is picked when importable;
set ``ADAIN_BACKEND=numpy`` or ``ADAIN_BACKEND=cython`` to force a
choice (forcing cython raises if the extension was never built).

``benchmarks/compare_backends.py`` times one against the other.
"""

import os

from . import kernels_np

_requested = os.environ.get("ADAIN_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "numpy"):
    raise ValueError(f"ADAIN_BACKEND must be auto|cython|numpy, got {_requested!r}")

if _requested == "numpy":
    impl = kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        impl = kernels_np
        BACKEND = "numpy"

im2col = impl.im2col
col2im = impl.col2im
maxpool_forward = impl.maxpool_forward
maxpool_backward = impl.maxpool_backward
reflect_pad_backward = impl.reflect_pad_backward


def available_backends():
    """Names of importable backends, compiled one first when present."""
    names = []
    try:
        from . import _kernels  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    names.append("numpy")
    return names


def get_impl(name):
    if name == "numpy":
        return kernels_np
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
