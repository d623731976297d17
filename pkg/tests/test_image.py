"""Tests for the core image containers and raster utilities."""

import numpy as np
import pytest

from hdrrecon.image import (
    Histogram,
    ImageError,
    ImageHDR,
    ImageLDR,
    LUMINANCE_WEIGHTS,
    histogram,
    hsv_to_rgb,
    luminance,
    quantile,
    resample_bilinear,
    rgb_to_hsv,
)


class TestContainers:
    def test_hdr_accepts_valid(self):
        img = ImageHDR(np.ones((4, 5, 3), dtype=np.float32))
        assert img.data.shape == (4, 5, 3)

    def test_hdr_rejects_negative(self):
        data = np.ones((4, 4, 3), dtype=np.float32)
        data[0, 0, 0] = -1.0
        with pytest.raises(ImageError):
            ImageHDR(data)

    def test_hdr_rejects_nonfinite(self):
        data = np.ones((4, 4, 3), dtype=np.float32)
        data[1, 1, 1] = np.inf
        with pytest.raises(ImageError):
            ImageHDR(data)

    def test_hdr_rejects_wrong_shape(self):
        with pytest.raises(ImageError):
            ImageHDR(np.ones((4, 4), dtype=np.float32))
        with pytest.raises(ImageError):
            ImageHDR(np.ones((4, 4, 4), dtype=np.float32))

    def test_hdr_allows_values_above_one(self):
        img = ImageHDR(np.full((2, 2, 3), 1e6, dtype=np.float32))
        assert float(img.data.max()) == 1e6

    def test_ldr_accepts_code_grid(self):
        codes = np.arange(48).reshape(4, 4, 3) % 256
        img = ImageLDR(codes.astype(np.float32) / 255.0)
        assert np.array_equal(img.codes(), codes)

    def test_ldr_rejects_off_grid(self):
        with pytest.raises(ImageError):
            ImageLDR(np.full((2, 2, 3), 0.5, dtype=np.float32))

    def test_ldr_rejects_out_of_range(self):
        with pytest.raises(ImageError):
            ImageLDR(np.full((2, 2, 3), 2.0, dtype=np.float32))

    def test_ldr_codes_round_trip(self):
        rng = np.random.default_rng(0)
        codes = rng.integers(0, 256, size=(8, 8, 3))
        img = ImageLDR((codes / 255.0).astype(np.float32))
        assert np.array_equal(img.codes(), codes)


class TestLuminance:
    def test_weights(self):
        assert np.allclose(LUMINANCE_WEIGHTS, [0.213, 0.715, 0.072])
        assert abs(sum(LUMINANCE_WEIGHTS) - 1.0) < 1e-12

    def test_white_is_unit(self):
        lum = luminance(np.ones((3, 3, 3)))
        assert np.allclose(lum, 1.0)

    def test_channel_weights(self):
        red = np.zeros((1, 1, 3))
        red[..., 0] = 1.0
        assert np.isclose(luminance(red)[0, 0], 0.213)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 4, (5, 5, 3))
        b = rng.uniform(0, 4, (5, 5, 3))
        assert np.allclose(luminance(a + 2 * b), luminance(a) + 2 * luminance(b))


class TestHsv:
    def test_round_trip(self):
        rng = np.random.default_rng(2)
        rgb = rng.uniform(0, 1, (16, 16, 3))
        back = hsv_to_rgb(rgb_to_hsv(rgb))
        assert np.allclose(back, rgb, atol=1e-12)

    def test_round_trip_unbounded(self):
        # Scene-referred values well above 1 must survive the hue/sat cycle.
        rng = np.random.default_rng(3)
        rgb = np.exp(rng.normal(0, 2, (8, 8, 3)))
        back = hsv_to_rgb(rgb_to_hsv(rgb))
        assert np.allclose(back, rgb, rtol=1e-12)

    def test_pure_red_hue(self):
        hsv = rgb_to_hsv(np.array([[[1.0, 0.0, 0.0]]]))
        assert np.isclose(hsv[0, 0, 0], 0.0)
        assert np.isclose(hsv[0, 0, 1], 1.0)
        assert np.isclose(hsv[0, 0, 2], 1.0)

    def test_pure_green_hue_degrees(self):
        hsv = rgb_to_hsv(np.array([[[0.0, 1.0, 0.0]]]))
        assert np.isclose(hsv[0, 0, 0], 120.0)

    def test_gray_has_zero_saturation(self):
        hsv = rgb_to_hsv(np.full((2, 2, 3), 0.25))
        assert np.allclose(hsv[..., 1], 0.0)


class TestResample:
    def test_identity(self):
        rng = np.random.default_rng(4)
        img = rng.uniform(0, 1, (7, 9, 3))
        assert np.allclose(resample_bilinear(img, 7, 9), img)

    def test_constant_preserved(self):
        img = np.full((10, 10, 3), 0.37)
        out = resample_bilinear(img, 4, 4)
        assert np.allclose(out, 0.37)

    def test_downsample_shape(self):
        img = np.zeros((64, 48, 3))
        assert resample_bilinear(img, 32, 24).shape == (32, 24, 3)

    def test_linear_ramp_preserved(self):
        # A linear ramp stays linear under bilinear interpolation (interior).
        x = np.arange(32, dtype=np.float64)
        img = np.repeat(x[None, :, None], 32, axis=0) * np.ones((1, 1, 3))
        out = resample_bilinear(img, 16, 16)
        rows = out[:, 2:-2, 0]
        diffs = np.diff(rows, axis=1)
        assert np.allclose(diffs, diffs[0, 0])

    def test_range_bounded(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(0, 1, (20, 20, 3))
        out = resample_bilinear(img, 13, 17)
        assert out.min() >= img.min() - 1e-12
        assert out.max() <= img.max() + 1e-12


class TestHistogramQuantile:
    def test_histogram_counts(self):
        values = np.array([0.1, 0.1, 0.5, 0.9])
        h = histogram(values, 2, (0.0, 1.0))
        assert isinstance(h, Histogram)
        # half-open bins: 0.5 belongs to the upper bin
        assert np.array_equal(h.counts, [2, 2])
        assert np.allclose(h.bin_edges, [0.0, 0.5, 1.0])

    def test_quantile_interpolates(self):
        assert quantile(np.array([1.0, 2.0, 3.0, 4.0]), 0.5) == 2.5

    def test_quantile_endpoints(self):
        vals = np.array([3.0, 1.0, 2.0])
        assert quantile(vals, 0.0) == 1.0
        assert quantile(vals, 1.0) == 3.0
