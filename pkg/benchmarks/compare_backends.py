"""Compare the compiled kernel backend against the numpy fallback.

Times the three hot kernels (patch unfolding, its adjoint, max pooling)
plus one end-to-end stylization under each importable backend.

    python benchmarks/compare_backends.py
"""

import time

import numpy as np

from adain import backend
from adain.bench import bench_backends, format_backend_table


def end_to_end(backend_name, size=256, count=5):
    impl = backend.get_impl(backend_name)
    saved = (backend.im2col, backend.col2im, backend.maxpool_forward, backend.maxpool_backward, backend.reflect_pad_backward)
    backend.im2col = impl.im2col
    backend.col2im = impl.col2im
    backend.maxpool_forward = impl.maxpool_forward
    backend.maxpool_backward = impl.maxpool_backward
    backend.reflect_pad_backward = impl.reflect_pad_backward
    try:
        from adain.images import as_image
        from adain.model import build_model, encode_style, transfer_with_descriptor

        model = build_model("tiny", decoder_seed=0)
        rng = np.random.default_rng(0)
        imgs = [as_image(rng.uniform(size=(size, size, 3)).astype(np.float32)) for _ in range(count)]
        style = as_image(rng.uniform(size=(size, size, 3)).astype(np.float32))
        descriptor = encode_style(model, style)
        transfer_with_descriptor(model, imgs[0], descriptor)  # warm-up
        t0 = time.perf_counter()
        for img in imgs:
            transfer_with_descriptor(model, img, descriptor)
        return (time.perf_counter() - t0) / count
    finally:
        (backend.im2col, backend.col2im, backend.maxpool_forward, backend.maxpool_backward, backend.reflect_pad_backward) = saved


def main():
    print(f"selected at import: {backend.BACKEND}  (available: {backend.available_backends()})\n")
    print(format_backend_table(bench_backends()))
    print()
    for name in backend.available_backends():
        seconds = end_to_end(name)
        print(f"end-to-end 256px stylization, {name:<7}: {seconds * 1000:7.1f} ms/image")


if __name__ == "__main__":
    main()
