import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from adain.errors import DimensionError
from adain.images import (
    as_image,
    color_match,
    equalize_luminance,
    load_image,
    random_crop,
    resize_smallest_side,
    rgb_to_ycbcr,
    save_image,
)


def random_image(rng, h=32, w=32):
    return as_image(rng.uniform(size=(h, w, 3)).astype(np.float32))


class TestLoadSave:
    def test_roundtrip_bound(self, rng, tmp_path):
        img = random_image(rng)
        path = tmp_path / "x.png"
        save_image(img, path)
        back = load_image(path)
        assert np.abs(back.data - img.data).max() <= 0.5 / 255 + 1e-7

    def test_all_black_png(self, tmp_path):
        path = tmp_path / "black.png"
        PILImage.fromarray(np.zeros((8, 8, 3), dtype=np.uint8)).save(path)
        img = load_image(path)
        assert np.all(img.data == 0.0)

    def test_255_maps_to_one(self, tmp_path):
        path = tmp_path / "white.png"
        PILImage.fromarray(np.full((4, 4, 3), 255, dtype=np.uint8)).save(path)
        assert np.all(load_image(path).data == 1.0)

    def test_grayscale_replicated_alpha_dropped(self, tmp_path):
        gray = tmp_path / "g.png"
        PILImage.fromarray(np.full((4, 4), 128, dtype=np.uint8), mode="L").save(gray)
        img = load_image(gray)
        assert np.array_equal(img.data[0, 0], img.data[0, 1])

        rgba = tmp_path / "a.png"
        arr = np.zeros((4, 4, 4), dtype=np.uint8)
        arr[..., 0] = 200
        arr[..., 3] = 7
        PILImage.fromarray(arr, mode="RGBA").save(rgba)
        img = load_image(rgba)
        assert img.data.shape[1] == 3

    def test_unreadable_file_raises(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not an image at all")
        with pytest.raises(OSError):
            load_image(bad)

    def test_non_png_jpeg_rejected(self, tmp_path):
        bmp = tmp_path / "x.bmp"
        PILImage.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(bmp, format="BMP")
        with pytest.raises(OSError, match="PNG and JPEG"):
            load_image(bmp)

    def test_jpeg_accepted(self, tmp_path, rng):
        path = tmp_path / "x.jpg"
        save_image(random_image(rng), path)
        img = load_image(path)
        assert img.data.shape[1] == 3

    def test_quantization_round_half_up(self, tmp_path):
        # 0.5/255 rounds up to 1, just below rounds down to 0
        img = as_image(np.full((2, 2, 3), 0.5 / 255, dtype=np.float32))
        path = tmp_path / "q.png"
        save_image(img, path)
        assert np.all(np.asarray(PILImage.open(path)) == 1)


class TestResize:
    def test_768x1024_to_512x683(self, rng):
        img = as_image(rng.uniform(size=(768, 1024, 3)).astype(np.float32))
        out = resize_smallest_side(img, 512)
        assert out.data.shape == (1, 3, 512, 683)

    def test_square_identity(self, rng):
        img = random_image(rng, 64, 64)
        out = resize_smallest_side(img, 64)
        assert out is img

    def test_constant_stays_constant(self):
        img = as_image(np.full((40, 60, 3), 0.37, dtype=np.float32))
        out = resize_smallest_side(img, 24)
        assert out.data.shape == (1, 3, 24, 36)
        assert np.abs(out.data - 0.37).max() < 1e-6

    def test_values_stay_in_range(self, rng):
        out = resize_smallest_side(random_image(rng, 37, 53), 20)
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0

    def test_degenerate_rejected(self):
        with pytest.raises(DimensionError):
            resize_smallest_side(as_image(np.zeros((4, 4, 3))), 0)


class TestRandomCrop:
    def test_exact_size_unchanged(self, rng):
        img = random_image(rng, 16, 16)
        out = random_crop(img, 16, np.random.default_rng(0))
        assert np.array_equal(out.data, img.data)

    def test_same_seed_same_crop(self, rng):
        img = random_image(rng, 64, 64)
        a = random_crop(img, 32, np.random.default_rng(42))
        b = random_crop(img, 32, np.random.default_rng(42))
        assert np.array_equal(a.data, b.data)

    def test_offsets_within_range(self, rng):
        img = random_image(rng, 300, 300)
        marker = img.data.copy()
        for seed in range(20):
            out = random_crop(img, 256, np.random.default_rng(seed))
            assert out.data.shape == (1, 3, 256, 256)
        # offsets in [0, 44]: the crop always fits
        assert np.array_equal(img.data, marker)

    def test_too_small_rejected(self, rng):
        with pytest.raises(DimensionError):
            random_crop(random_image(rng, 8, 8), 16, np.random.default_rng(0))


def ks_to_uniform(y):
    """Discrete KS distance of quantized luminance to the uniform CDF."""
    bins = np.floor(np.clip(y, 0, 1) * 255.0 + 0.5).astype(np.int64)
    cdf = np.cumsum(np.bincount(bins.reshape(-1), minlength=256)) / bins.size
    uniform = (np.arange(256) + 1) / 256.0
    return np.abs(cdf - uniform).max()


class TestEqualizeLuminance:
    def test_uniform_histogram_barely_moves(self):
        # ramp covering every 8-bit level equally often
        levels = np.repeat(np.arange(256), 4) / 255.0
        rgb = np.stack([levels] * 3, axis=-1).reshape(32, 32, 3)
        img = as_image(rgb.astype(np.float32))
        out = equalize_luminance(img)
        y_in = rgb_to_ycbcr(img.data[0].astype(np.float64))[0]
        y_out = rgb_to_ycbcr(out.data[0].astype(np.float64))[0]
        assert np.abs(y_out - y_in).max() < 1 / 128

    def test_constant_image_stays_constant(self):
        img = as_image(np.full((16, 16, 3), 0.42, dtype=np.float32))
        out = equalize_luminance(img)
        assert np.allclose(out.data, out.data[0, :, :1, :1][None], atol=1e-6)

    def test_two_level_image_maps_to_half_and_one(self):
        y = np.zeros((16, 16), dtype=np.float32)
        y[:8] = 0.2
        y[8:] = 0.6
        img = as_image(np.stack([y] * 3, axis=-1))
        out = equalize_luminance(img)
        y_out = rgb_to_ycbcr(out.data[0].astype(np.float64))[0]
        lows = y_out[:8]
        highs = y_out[8:]
        assert np.allclose(lows, 0.5, atol=1e-6)
        assert np.allclose(highs, 1.0, atol=1e-6)

    def test_output_in_range(self, rng):
        out = equalize_luminance(random_image(rng))
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_ks_distance_shrinks(self, seed):
        r = np.random.default_rng(seed)
        base = r.uniform(0.2, 0.6)
        spread = r.uniform(0.05, 0.2)
        noise = np.clip(r.normal(base, spread, size=(32, 32)), 0, 1).astype(np.float32)
        img = as_image(np.stack([noise] * 3, axis=-1))
        y_in = rgb_to_ycbcr(img.data[0].astype(np.float64))[0]
        y_out = rgb_to_ycbcr(equalize_luminance(img).data[0].astype(np.float64))[0]
        assert ks_to_uniform(y_out) < ks_to_uniform(y_in)


class TestColorMatch:
    def test_identity_when_stats_match(self, rng):
        img = random_image(rng, 24, 24)
        out = color_match(img, img)
        assert np.abs(out.data - img.data).max() < 1e-5

    def test_constant_style_goes_to_content_mean(self, rng):
        style = as_image(np.full((16, 16, 3), 0.8, dtype=np.float32))
        content = random_image(rng, 16, 16)
        out = color_match(style, content)
        expected = content.data.mean(axis=(2, 3)).reshape(3)
        assert np.abs(out.data.mean(axis=(2, 3)).reshape(3) - expected).max() < 1e-6

    def test_mean_matches_content_mean(self, rng):
        # grayscale ramp style vs colorful content, mid-range so clamping is idle
        ramp = np.linspace(0.3, 0.7, 24 * 24, dtype=np.float32).reshape(24, 24)
        style = as_image(np.stack([ramp] * 3, axis=-1))
        content = as_image((rng.uniform(size=(24, 24, 3)) * 0.4 + 0.3).astype(np.float32))
        out = color_match(style, content)
        diff = out.data.mean(axis=(2, 3)) - content.data.mean(axis=(2, 3))
        assert np.abs(diff).max() < 1e-6

    def test_covariance_matches(self, rng):
        style = random_image(rng, 32, 32)
        content = as_image((rng.uniform(size=(32, 32, 3)) * 0.5 + 0.25).astype(np.float32))
        out = color_match(style, content)
        cov_out = np.cov(out.data[0].reshape(3, -1), bias=True)
        cov_c = np.cov(content.data[0].reshape(3, -1).astype(np.float64), bias=True)
        assert np.abs(cov_out - cov_c).max() < 1e-4

    def test_output_clamped(self, rng):
        style = random_image(rng)
        content = random_image(rng)
        out = color_match(style, content)
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0
