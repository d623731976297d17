"""End-to-end single-image HDR reconstruction.

The LDR input is linearized with a fixed gamma curve, the network predicts
log-HDR content, and the two are blended per pixel: non-saturated pixels keep
the linearized input exactly, saturated ones take the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import ImageHDR, ImageLDR
from .losses import blend_mask
from .network import Network

# Guard against early-training overflow of exp(y) in the blend.
EXP_CLAMP_MAX = 1e12


@dataclass(frozen=True)
class ReconstructionConfig:
    tau: float = 0.95
    gamma: float = 2.0


def linearize(ldr: np.ndarray, gamma: float = 2.0) -> np.ndarray:
    """Assumed inverse camera curve x^gamma (display to linear)."""
    return np.asarray(ldr, dtype=np.float64) ** gamma


def residual(hdr: np.ndarray) -> np.ndarray:
    """Above-saturation content max(0, x - 1)."""
    return np.maximum(0.0, np.asarray(hdr) - 1.0)


def pad_to_multiple(data: np.ndarray, levels: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Reflection-pad right/bottom to the next multiple of 2^levels.

    Returns the padded array and the original (height, width) for cropping.
    """
    d = 2 ** levels
    h, w = data.shape[0], data.shape[1]
    ph = (-h) % d
    pw = (-w) % d
    if ph or pw:
        pad = [(0, ph), (0, pw)] + [(0, 0)] * (data.ndim - 2)
        data = np.pad(data, pad, mode="reflect")
    return data, (h, w)


def predict_log(net: Network, ldr: ImageLDR) -> np.ndarray:
    """Network log-domain output at the input resolution (padding handled)."""
    padded, (h, w) = pad_to_multiple(ldr.data, net.config.levels)
    y = net.forward(padded[None].astype(net.dtype), training=False)[0]
    return y[:h, :w].astype(np.float64)


def predict(net: Network, ldr: ImageLDR,
            config: ReconstructionConfig = ReconstructionConfig()) -> ImageHDR:
    """Blended reconstruction H = (1 - alpha) D^gamma + alpha exp(y)."""
    y = predict_log(net, ldr)
    return ImageHDR(blend(ldr.data, y, config).astype(np.float32))


def blend(ldr_data: np.ndarray, y_log: np.ndarray,
          config: ReconstructionConfig = ReconstructionConfig()) -> np.ndarray:
    """Pixel-wise blend in double precision; endpoint pixels (alpha 0 or 1)
    take the linearized input / the prediction exactly."""
    alpha = blend_mask(ldr_data, config.tau)[..., None]
    lin = linearize(ldr_data, config.gamma)
    pred = np.minimum(np.exp(np.asarray(y_log, dtype=np.float64)), EXP_CLAMP_MAX)
    out = (1.0 - alpha) * lin + alpha * pred
    out = np.where(alpha == 0.0, lin, out)
    out = np.where(alpha == 1.0, pred, out)
    return out
