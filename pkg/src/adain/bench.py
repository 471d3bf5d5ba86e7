"""Timing harnesses: stylization throughput and kernel-backend comparison.

The stylization bench reports mean seconds per image at each size, both
excluding and including style encoding. Absolute numbers are
hardware-dependent and informational; the published reference figures
are printed alongside, clearly labeled as context rather than targets.
"""

import time

import numpy as np

from . import backend
from .images import as_image
from .model import encode_style, transfer_with_descriptor

# published reference timings (seconds, GPU hardware): context only
REFERENCE_TIMINGS = {256: (0.018, 0.027), 512: (0.065, 0.098)}


def _probe_images(rng, size, count):
    return [as_image(rng.uniform(size=(size, size, 3)).astype(np.float32)) for _ in range(count)]


def bench_stylize(model, sizes=(256, 512), count=10, seed=0, rounds=3):
    """Rows of {size, excluding, including, reference} mean seconds per image.

    Measurements interleave the two loop kinds and keep the best round,
    which cancels clock-frequency drift on a machine that has just been
    under sustained load.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for size in sizes:
        contents = _probe_images(rng, size, count)
        style = _probe_images(rng, size, 1)[0]

        descriptor = encode_style(model, style)
        transfer_with_descriptor(model, contents[0], descriptor)  # warm-up, untimed
        excluding = including = float("inf")
        for _ in range(rounds):
            t0 = time.perf_counter()
            for img in contents:
                transfer_with_descriptor(model, img, descriptor)
            excluding = min(excluding, (time.perf_counter() - t0) / count)

            t0 = time.perf_counter()
            for img in contents:
                d = encode_style(model, style)
                transfer_with_descriptor(model, img, d)
            including = min(including, (time.perf_counter() - t0) / count)

        rows.append(
            {
                "size": size,
                "excluding": excluding,
                "including": including,
                "reference": REFERENCE_TIMINGS.get(size),
            }
        )
    return rows


def bench_descriptor_reuse(model, size=128, count=10, seed=0, rounds=3):
    """Total seconds for count stylizations: cached descriptor vs full runs.

    Alternating best-of-rounds measurement, same rationale as
    bench_stylize; the full loop re-encodes the style per image and so
    does strictly more work.
    """
    rng = np.random.default_rng(seed)
    contents = _probe_images(rng, size, count)
    style = _probe_images(rng, size, 1)[0]

    warm = encode_style(model, style)
    transfer_with_descriptor(model, contents[0], warm)

    cached_total = full_total = float("inf")
    for _ in range(rounds):
        t0 = time.perf_counter()
        descriptor = encode_style(model, style)
        for img in contents:
            transfer_with_descriptor(model, img, descriptor)
        cached_total = min(cached_total, time.perf_counter() - t0)

        t0 = time.perf_counter()
        for img in contents:
            d = encode_style(model, style)
            transfer_with_descriptor(model, img, d)
        full_total = min(full_total, time.perf_counter() - t0)
    return {"cached_total": cached_total, "full_total": full_total, "count": count}


def bench_backends(shapes=((4, 32, 32, 32, 3), (4, 64, 16, 16, 3)), repeats=20, seed=0):
    """Time im2col/col2im/maxpool for every importable backend.

    Shapes are (N, C, H, W, k). Returns {backend: {kernel: seconds}}.
    """
    rng = np.random.default_rng(seed)
    results = {}
    for name in backend.available_backends():
        impl = backend.get_impl(name)
        timings = {"im2col": 0.0, "col2im": 0.0, "maxpool": 0.0}
        for n, c, h, w, k in shapes:
            x = np.ascontiguousarray(rng.standard_normal((n, c, h, w)).astype(np.float32))
            cols = impl.im2col(x, k, k, 1)
            g = np.ascontiguousarray(rng.standard_normal(cols.shape).astype(np.float32))
            t0 = time.perf_counter()
            for _ in range(repeats):
                impl.im2col(x, k, k, 1)
            timings["im2col"] += time.perf_counter() - t0
            t0 = time.perf_counter()
            for _ in range(repeats):
                impl.col2im(g, h, w, k, k, 1)
            timings["col2im"] += time.perf_counter() - t0
            t0 = time.perf_counter()
            for _ in range(repeats):
                out, arg = impl.maxpool_forward(x, 2, 2)
            timings["maxpool"] += time.perf_counter() - t0
        results[name] = {kernel: total / repeats for kernel, total in timings.items()}
    return results


def format_backend_table(results):
    lines = ["backend    im2col(s)   col2im(s)   maxpool(s)"]
    for name, timings in results.items():
        lines.append(
            f"{name:<10} {timings['im2col']:>10.6f} {timings['col2im']:>11.6f} {timings['maxpool']:>11.6f}"
        )
    return "\n".join(lines)
