"""Blend-mask construction and HDR training losses with analytic gradients.

Predictions live in the log domain; the ground truth enters as log(H + eps).
The direct loss is a mask-weighted MSE on log values. The I/R loss splits the
log image into a blurred log-illuminance component and a residual log
reflectance, and penalizes both, weighted by lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import LUMINANCE_WEIGHTS

DEFAULT_EPS = 1.0 / 255.0


@dataclass(frozen=True)
class LossConfig:
    mode: str = "ir"              # "direct" or "ir"
    lam: float = 0.5              # illuminance weight of the I/R loss
    tau: float = 0.95             # saturation threshold of the blend mask
    eps: float = DEFAULT_EPS      # log-domain offset
    gaussian_sigma: float = 2.0   # illuminance blur, pixels

    def __post_init__(self):
        if self.mode not in ("direct", "ir"):
            raise ValueError(f"unknown loss mode {self.mode!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")


def blend_mask(ldr: np.ndarray, tau: float = 0.95) -> np.ndarray:
    """Per-pixel alpha = max(0, max_c D - tau) / (1 - tau), a linear ramp from
    tau to the top code. Input (..., 3), output (...)."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    return np.maximum(0.0, np.asarray(ldr).max(axis=-1) - tau) / (1.0 - tau)


def direct_loss(y_pred: np.ndarray, hdr: np.ndarray, alpha: np.ndarray,
                eps: float = DEFAULT_EPS) -> tuple[float, np.ndarray]:
    """Mask-weighted log-domain MSE; returns (value, gradient wrt y_pred).

    Shapes: y_pred and hdr (..., H, W, 3), alpha (..., H, W). N counts pixels
    across all leading dims.
    """
    target = np.log(np.asarray(hdr, dtype=np.float64) + eps)
    diff = np.asarray(y_pred, dtype=np.float64) - target
    a = np.asarray(alpha, dtype=np.float64)[..., None]
    n = diff.size // 3
    value = float(np.sum((a * diff) ** 2) / (3 * n))
    grad = (2.0 / (3 * n)) * a * a * diff
    return value, grad


# ---------------------------------------------------------------------------
# Gaussian blur as an explicit linear operator (exact adjoint at borders).

def _gaussian_weights(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


_blur_matrix_cache: dict[tuple[int, float], np.ndarray] = {}


def _blur_matrix(length: int, sigma: float) -> np.ndarray:
    """Row i holds the kernel taps with replicated-edge index clamping."""
    key = (length, sigma)
    if key not in _blur_matrix_cache:
        w = _gaussian_weights(sigma)
        radius = len(w) // 2
        mat = np.zeros((length, length))
        for k, wk in enumerate(w):
            src = np.clip(np.arange(length) + k - radius, 0, length - 1)
            mat[np.arange(length), src] += wk
        _blur_matrix_cache[key] = mat
    return _blur_matrix_cache[key]


def gaussian_blur(raster: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of an (..., H, W) raster, kernel truncated at
    radius ceil(3 sigma) and renormalized, replicated edges."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(raster, dtype=np.float64)
    bh = _blur_matrix(x.shape[-2], sigma)
    bw = _blur_matrix(x.shape[-1], sigma)
    return np.einsum("ij,...jk,lk->...il", bh, x, bw)


def _blur_adjoint(grad: np.ndarray, sigma: float) -> np.ndarray:
    g = np.asarray(grad, dtype=np.float64)
    bh = _blur_matrix(g.shape[-2], sigma)
    bw = _blur_matrix(g.shape[-1], sigma)
    return np.einsum("ji,...jk,kl->...il", bh, g, bw)


# ---------------------------------------------------------------------------
# Illuminance / reflectance decomposition and loss.

def log_luminance(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log(sum_c w_c exp(y_c)) and the softmax-style channel weights
    d log-luminance / d y_c (computed with a max shift for stability)."""
    y = np.asarray(y, dtype=np.float64)
    m = y.max(axis=-1, keepdims=True)
    e = LUMINANCE_WEIGHTS * np.exp(y - m)
    s = e.sum(axis=-1, keepdims=True)
    lum = m[..., 0] + np.log(s[..., 0])
    return lum, e / s


def decompose_ir(y: np.ndarray, sigma: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Split a log image (..., H, W, 3) into (log_illuminance (..., H, W),
    log_reflectance (..., H, W, 3)); their sum reconstructs y exactly."""
    lum, _ = log_luminance(y)
    log_i = gaussian_blur(lum, sigma)
    log_r = np.asarray(y, dtype=np.float64) - log_i[..., None]
    return log_i, log_r


def ir_loss(y_pred: np.ndarray, hdr: np.ndarray, alpha: np.ndarray,
            config: LossConfig) -> tuple[float, np.ndarray]:
    """Illuminance/reflectance loss; returns (value, gradient wrt y_pred)."""
    y_pred = np.asarray(y_pred, dtype=np.float64)
    target = np.log(np.asarray(hdr, dtype=np.float64) + config.eps)
    a = np.asarray(alpha, dtype=np.float64)
    sigma = config.gaussian_sigma
    lam = config.lam
    n = y_pred.size // 3

    lum_p, softw = log_luminance(y_pred)
    log_i_p = gaussian_blur(lum_p, sigma)
    log_r_p = y_pred - log_i_p[..., None]
    log_i_t, log_r_t = decompose_ir(target, sigma)

    di = log_i_p - log_i_t
    dr = log_r_p - log_r_t
    value = float(lam / n * np.sum((a * di) ** 2)
                  + (1.0 - lam) / (3 * n) * np.sum((a[..., None] * dr) ** 2))

    g_i = (2.0 * lam / n) * a * a * di
    g_r = (2.0 * (1.0 - lam) / (3 * n)) * (a * a)[..., None] * dr
    # y feeds log I through the blur and log R both directly and via -log I.
    e = _blur_adjoint(g_i - g_r.sum(axis=-1), sigma)
    grad = g_r + softw * e[..., None]
    return value, grad


def hdr_loss(y_pred: np.ndarray, hdr: np.ndarray, alpha: np.ndarray,
             config: LossConfig) -> tuple[float, np.ndarray]:
    """Dispatch on config.mode."""
    if config.mode == "direct":
        return direct_loss(y_pred, hdr, alpha, config.eps)
    return ir_loss(y_pred, hdr, alpha, config)
