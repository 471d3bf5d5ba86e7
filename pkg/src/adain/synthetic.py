"""Procedural image generator for desk-scale training and tests.

Produces small RGB images with deliberately diverse per-image "styles":
different palettes, pattern families, contrast and noise levels. That
per-sample diversity is what the normalization experiments need from
their data. Fully deterministic under a seed.

Run directly to materialize a folder:

    python -m adain.synthetic out_dir --count 64 --size 96 --seed 0
"""

from pathlib import Path

import numpy as np

from .images import as_image, save_image


def _smooth_noise(rng, size, cells):
    """Low-frequency noise: coarse grid blown up bilinearly."""
    coarse = rng.uniform(size=(cells, cells))
    idx = np.linspace(0, cells - 1, size)
    lo = np.floor(idx).astype(int)
    hi = np.minimum(lo + 1, cells - 1)
    frac = idx - lo
    rows = coarse[lo][:, lo] * np.outer(1 - frac, 1 - frac)
    rows += coarse[lo][:, hi] * np.outer(1 - frac, frac)
    rows += coarse[hi][:, lo] * np.outer(frac, 1 - frac)
    rows += coarse[hi][:, hi] * np.outer(frac, frac)
    return rows


def _scalar_field(rng, size):
    kind = rng.integers(0, 4)
    yy, xx = np.mgrid[0:size, 0:size] / size
    if kind == 0:  # oriented gradient
        angle = rng.uniform(0, 2 * np.pi)
        field = np.cos(angle) * xx + np.sin(angle) * yy
    elif kind == 1:  # sinusoidal interference
        f1, f2 = rng.uniform(2, 9, size=2)
        p1, p2 = rng.uniform(0, 2 * np.pi, size=2)
        field = np.sin(2 * np.pi * f1 * xx + p1) * np.cos(2 * np.pi * f2 * yy + p2)
    elif kind == 2:  # soft blobs
        field = np.zeros((size, size))
        for _ in range(rng.integers(3, 8)):
            cx, cy = rng.uniform(0, 1, size=2)
            r = rng.uniform(0.08, 0.35)
            field += np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
    else:  # low-frequency noise
        field = _smooth_noise(rng, size, int(rng.integers(3, 9)))
    field = field - field.min()
    peak = field.max()
    return field / peak if peak > 0 else field


def make_image(rng, size=96):
    """One procedural RGB image with its own palette, texture and contrast.

    The per-image gamma / gain / color-cast jitter is deliberate: each
    sample carries a distinct global "style", which batch-level
    normalization cannot remove.
    """
    field = _scalar_field(rng, size)
    n_stops = int(rng.integers(2, 5))
    palette = rng.uniform(0, 1, size=(n_stops, 3))
    # map the field through palette stops
    stops = np.linspace(0, 1, n_stops)
    rgb = np.stack([np.interp(field, stops, palette[:, c]) for c in range(3)], axis=-1)
    rgb += rng.normal(0, rng.uniform(0.01, 0.08), size=rgb.shape)
    rgb = np.clip(rgb, 0, 1)
    # per-image tone curve, contrast window and color cast
    rgb = rgb ** rng.uniform(0.5, 2.0)
    gain = rng.uniform(0.2, 1.0)
    offset = rng.uniform(0.0, 1.0 - gain)
    rgb = rgb * gain + offset
    cast = rng.uniform(0.55, 1.0, size=(1, 1, 3))
    rgb = rgb * cast
    return as_image(np.clip(rgb, 0, 1).astype(np.float32))


def make_dataset(directory, count, size=96, seed=0, prefix="img"):
    """Write ``count`` PNGs; returns the sorted file paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        img = make_image(rng, size=size)
        path = directory / f"{prefix}_{i:04d}.png"
        save_image(img, path)
        paths.append(path)
    return paths


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="generate a synthetic image folder")
    parser.add_argument("directory")
    parser.add_argument("--count", type=int, default=64)
    parser.add_argument("--size", type=int, default=96)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--prefix", default="img")
    args = parser.parse_args(argv)
    paths = make_dataset(args.directory, args.count, size=args.size, seed=args.seed, prefix=args.prefix)
    print(f"wrote {len(paths)} images to {args.directory}")


if __name__ == "__main__":
    main()
