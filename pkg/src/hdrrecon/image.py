"""Image containers and basic raster operations.

Two pixel domains are used throughout the package:

* HDR: linear, scene-referred, nonnegative values that may exceed 1.
* LDR: display-referred values quantized to the 8-bit grid {0, 1/255, ..., 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Rec. 709-style luminance weights used for log-luminance in the I/R loss.
LUMINANCE_WEIGHTS = np.array([0.213, 0.715, 0.072])


class ImageError(ValueError):
    """Raised on invalid image data or malformed image files."""


@dataclass(frozen=True)
class ImageHDR:
    """Linear 3-channel raster, nonnegative float32 values, shape (H, W, 3)."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if d.ndim != 3 or d.shape[2] != 3 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ImageError(f"HDR image must have shape (H, W, 3), got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ImageError("HDR image contains non-finite values")
        if d.min() < 0:
            raise ImageError("HDR image contains negative values")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ImageLDR:
    """Display-referred 3-channel raster on the 1/255 grid, shape (H, W, 3)."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if d.ndim != 3 or d.shape[2] != 3 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ImageError(f"LDR image must have shape (H, W, 3), got {d.shape}")
        codes = d * 255.0
        if not np.allclose(codes, np.round(codes), atol=1e-3) or d.min() < 0 or d.max() > 1:
            raise ImageError("LDR values must lie on the 8-bit grid in [0, 1]")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def codes(self) -> np.ndarray:
        """Integer 8-bit codes, shape (H, W, 3), dtype uint8."""
        return np.round(self.data * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def bin_count(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        return self.counts / max(self.total, 1)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Weighted luminance 0.213 R + 0.715 G + 0.072 B of an (..., 3) raster."""
    rgb = np.asarray(rgb)
    return rgb @ LUMINANCE_WEIGHTS.astype(rgb.dtype)


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Hexcone HSV with hue in degrees [0, 360).

    Works for any nonnegative value range (v = max channel); hue is 0 for
    achromatic pixels.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = v - mn
    chromatic = delta > 0
    safe = np.where(chromatic, delta, 1.0)
    h = np.zeros_like(v)
    rmax = chromatic & (v == r)
    gmax = chromatic & (v == g) & ~rmax
    bmax = chromatic & ~rmax & ~gmax
    h = np.where(rmax, (g - b) / safe, h)
    h = np.where(gmax, 2.0 + (b - r) / safe, h)
    h = np.where(bmax, 4.0 + (r - g) / safe, h)
    h = (h * 60.0) % 360.0
    s = np.where(v > 0, delta / np.where(v > 0, v, 1.0), 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_hsv (hue in degrees)."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = (h % 360.0) / 60.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [
        (v, t, p), (q, v, p), (p, v, t),
        (p, q, v), (t, p, v), (v, p, q),
    ]
    r = np.select([i == k for k in range(6)], [c[0] for c in choices])
    g = np.select([i == k for k in range(6)], [c[1] for c in choices])
    b = np.select([i == k for k in range(6)], [c[2] for c in choices])
    return np.stack([r, g, b], axis=-1)


def resample_bilinear(image: np.ndarray, new_height: int, new_width: int) -> np.ndarray:
    """Separable bilinear resampling with pixel-center alignment.

    Sample i of the output maps to source coordinate (i + 0.5) * scale - 0.5,
    clamped to the valid range, so a constant image stays constant.
    """
    if new_height < 1 or new_width < 1:
        raise ImageError("target dimensions must be positive")
    image = np.asarray(image)
    h, w = image.shape[:2]

    def axis_coords(n_src, n_dst):
        scale = n_src / n_dst
        x = (np.arange(n_dst) + 0.5) * scale - 0.5
        x = np.clip(x, 0.0, n_src - 1.0)
        x0 = np.floor(x).astype(int)
        x1 = np.minimum(x0 + 1, n_src - 1)
        frac = x - x0
        return x0, x1, frac

    y0, y1, fy = axis_coords(h, new_height)
    x0, x1, fx = axis_coords(w, new_width)
    fy = fy.reshape(-1, 1, *([1] * (image.ndim - 2)))
    fx = fx.reshape(1, -1, *([1] * (image.ndim - 2)))
    top = image[y0][:, x0] * (1 - fx) + image[y0][:, x1] * fx
    bot = image[y1][:, x0] * (1 - fx) + image[y1][:, x1] * fx
    return (top * (1 - fy) + bot * fy).astype(image.dtype)


def histogram(values: np.ndarray, bin_count: int, value_range: tuple[float, float]) -> Histogram:
    """Uniform-bin histogram; values at the upper edge fall in the last bin."""
    lo, hi = value_range
    if bin_count < 1:
        raise ImageError("bin_count must be >= 1")
    if not hi > lo:
        raise ImageError("empty histogram range")
    counts, edges = np.histogram(np.asarray(values).ravel(), bins=bin_count, range=(lo, hi))
    return Histogram(bin_edges=edges, counts=counts)


def quantile(values: np.ndarray, q: float) -> float:
    """Exact order-statistic quantile with linear interpolation."""
    values = np.asarray(values).ravel()
    if values.size == 0:
        raise ImageError("quantile of empty data")
    if not 0.0 <= q <= 1.0:
        raise ImageError("q must be in [0, 1]")
    return float(np.quantile(values, q))
