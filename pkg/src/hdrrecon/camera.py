"""Virtual camera: turns HDR scenes into augmented (LDR, HDR) training pairs.

The camera applies a random square crop, bilinear resampling, optional flip,
hue/saturation perturbation, exposure scaling so a target fraction of pixels
clips, a sigmoid response curve, additive noise and 8-bit quantization. It can
also run in reverse, turning unsaturated LDR images into simulated HDR data.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .image import (
    ImageError,
    ImageHDR,
    ImageLDR,
    hsv_to_rgb,
    quantile,
    resample_bilinear,
    rgb_to_hsv,
)

# Pixel count below which the histogram of LDR codes may not contain the top
# code for an image to qualify as unsaturated: 50 pixels of a 256x256 image.
DEFAULT_XI = 50.0 / 256.0**2


@dataclass(frozen=True)
class CameraParams:
    """One sampled virtual-camera calibration."""

    n: float                 # sigmoid exponent
    sigma_cc: float          # sigmoid offset
    v: float                 # target clipped-pixel fraction
    hue_shift: float         # degrees
    sat_shift: float
    noise_sigma: float       # std in display-value units
    flip: bool

    def __post_init__(self):
        if self.n <= 0 or self.sigma_cc <= 0:
            raise ValueError("camera curve parameters must be positive")
        if not 0.0 <= self.v <= 1.0:
            raise ValueError("clip fraction v must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


@dataclass(frozen=True)
class CropSpec:
    x: int
    y: int
    size: int
    target: int

    def __post_init__(self):
        if self.size < 1 or self.target < 1 or self.x < 0 or self.y < 0:
            raise ValueError("invalid crop rectangle")


@dataclass(frozen=True)
class AugmentConfig:
    per_megapixel: float = 10.0
    crop_range: tuple[float, float] = (0.20, 0.60)
    target_size: int = 320
    v_range: tuple[float, float] = (0.05, 0.15)
    n_mean: float = 0.9
    n_std: float = 0.1
    sigma_mean: float = 0.6
    sigma_std: float = 0.1
    hue_std: float = 7.0
    sat_std: float = 0.1
    noise_max: float = 0.01
    flip_prob: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class TrainingPair:
    input: ImageLDR
    target: ImageHDR
    params: CameraParams

    def __post_init__(self):
        if self.input.data.shape != self.target.data.shape:
            raise ValueError("input and target dimensions differ")


# Curve parameters are rejection-resampled above this floor so the sigmoid
# stays well-defined.
CURVE_PARAM_MIN = 0.05


def sample_camera(config: AugmentConfig, rng: np.random.Generator) -> CameraParams:
    """Draw one camera calibration from the configured distributions."""
    def positive_normal(mean, std):
        while True:
            x = rng.normal(mean, std)
            if x > CURVE_PARAM_MIN:
                return x

    return CameraParams(
        n=positive_normal(config.n_mean, config.n_std),
        sigma_cc=positive_normal(config.sigma_mean, config.sigma_std),
        v=rng.uniform(*config.v_range),
        hue_shift=rng.normal(0.0, config.hue_std),
        sat_shift=rng.normal(0.0, config.sat_std),
        noise_sigma=rng.uniform(0.0, config.noise_max),
        flip=bool(rng.random() < config.flip_prob),
    )


def sample_crops(image_dims: tuple[int, int], config: AugmentConfig,
                 rng: np.random.Generator) -> list[CropSpec]:
    """Random square crops: round(per_megapixel * MP) of them, sides drawn
    uniformly within crop_range of the smaller image dimension."""
    height, width = image_dims
    lo, hi = config.crop_range
    short = min(width, height)
    if int(short * lo) < 1:
        raise ImageError("image too small for the configured crop range")
    count = int(round(config.per_megapixel * width * height / 1e6))
    crops = []
    for _ in range(count):
        size = int(rng.uniform(short * lo, short * hi))
        size = max(1, min(size, short))
        x = int(rng.integers(0, width - size + 1))
        y = int(rng.integers(0, height - size + 1))
        crops.append(CropSpec(x=x, y=y, size=size, target=config.target_size))
    return crops


def exposure_scale(image: ImageHDR | np.ndarray, v: float) -> float:
    """Gain s = 1 / H_th, with H_th the (1-v) quantile of the per-pixel max
    channel, so that a fraction ~v of pixels reaches 1 after scaling."""
    if not 0.0 < v < 1.0:
        raise ValueError("v must be in (0, 1)")
    data = image.data if isinstance(image, ImageHDR) else np.asarray(image)
    h_th = quantile(data.max(axis=-1), 1.0 - v)
    if h_th <= 0:
        raise ImageError("cannot expose an all-zero image")
    return 1.0 / h_th


def camera_curve(x: np.ndarray | float, n: float, sigma_cc: float) -> np.ndarray | float:
    """Sigmoid response f(x) = (1 + sigma) x^n / (x^n + sigma); f(0)=0, f(1)=1."""
    xn = np.minimum(np.asarray(x, dtype=np.float64), 1.0) ** n
    out = (1.0 + sigma_cc) * xn / (xn + sigma_cc)
    return out if np.ndim(x) else float(out)


def inverse_camera_curve(y: np.ndarray | float, n: float, sigma_cc: float) -> np.ndarray | float:
    """Closed-form inverse of camera_curve on [0, 1]."""
    ya = np.asarray(y, dtype=np.float64)
    out = (sigma_cc * ya / (1.0 + sigma_cc - ya)) ** (1.0 / n)
    return out if np.ndim(y) else float(out)


def clip_quantize(values: np.ndarray) -> ImageLDR:
    """Clip at 1 and quantize to the 1/255 grid: floor(255 min(1,x) + 0.5)/255."""
    x = np.minimum(np.asarray(values, dtype=np.float64), 1.0)
    codes = np.clip(np.floor(255.0 * x + 0.5), 0.0, 255.0)
    return ImageLDR((codes / 255.0).astype(np.float32))


def _perturb_color(rgb: np.ndarray, hue_shift: float, sat_shift: float) -> np.ndarray:
    if hue_shift == 0.0 and sat_shift == 0.0:
        return rgb
    hsv = rgb_to_hsv(rgb)
    hsv[..., 0] = (hsv[..., 0] + hue_shift) % 360.0
    hsv[..., 1] = np.clip(hsv[..., 1] + sat_shift, 0.0, 1.0)
    return hsv_to_rgb(hsv)


def augment(scene: ImageHDR, crop: CropSpec, cam: CameraParams,
            rng: np.random.Generator | None = None) -> TrainingPair:
    """Run the full virtual-camera pipeline on one crop of a scene.

    Order: crop, resample, flip, hue/saturation, exposure scale (gives the
    linear target), then response curve + noise + quantization (gives the
    LDR input). `rng` is only consumed when cam.noise_sigma > 0.
    """
    if crop.y + crop.size > scene.height or crop.x + crop.size > scene.width:
        raise ImageError("crop rectangle outside the scene")
    patch = scene.data[crop.y:crop.y + crop.size, crop.x:crop.x + crop.size]
    patch = resample_bilinear(patch.astype(np.float64), crop.target, crop.target)
    if cam.flip:
        patch = patch[:, ::-1]
    patch = _perturb_color(patch, cam.hue_shift, cam.sat_shift)
    patch = np.maximum(patch, 0.0)
    s = exposure_scale(patch, cam.v)
    target = patch * s
    display = camera_curve(np.minimum(target, 1.0), cam.n, cam.sigma_cc)
    if cam.noise_sigma > 0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng")
        display = display + rng.normal(0.0, cam.noise_sigma, size=display.shape)
    return TrainingPair(
        input=clip_quantize(display),
        target=ImageHDR(target.astype(np.float32)),
        params=cam,
    )


def filter_unsaturated(image: ImageLDR, xi: float = DEFAULT_XI) -> bool:
    """True iff the fraction of pixels whose max channel sits at the top code
    is strictly below xi."""
    saturated = (image.data.max(axis=-1) >= 1.0).mean()
    return bool(saturated < xi)


def simulate_hdr(image: ImageLDR, s: float, n: float, sigma_cc: float) -> ImageHDR:
    """Linearize an LDR image through the inverse curve and apply gain s."""
    linear = inverse_camera_curve(image.data.astype(np.float64), n, sigma_cc)
    return ImageHDR((s * linear).astype(np.float32))


# ---------------------------------------------------------------------------
# Dataset generation

def pair_rng(seed: int, scene_index: int, crop_index: int) -> np.random.Generator:
    """Independent stream per (scene, crop) work item; parallel-safe."""
    return np.random.default_rng(np.random.SeedSequence([seed, scene_index, crop_index]))


def generate_pairs(scenes: list[ImageHDR], config: AugmentConfig):
    """Yield (scene_index, crop_index, TrainingPair) over all scenes.

    Deterministic given config.seed regardless of iteration order.
    """
    for scene_index, scene in enumerate(scenes):
        layout_rng = pair_rng(config.seed, scene_index, 0xFFFF)
        crops = sample_crops((scene.height, scene.width), config, layout_rng)
        for crop_index, crop in enumerate(crops):
            rng = pair_rng(config.seed, scene_index, crop_index)
            cam = sample_camera(config, rng)
            yield scene_index, crop_index, augment(scene, crop, cam, rng)


def params_to_meta(cam: CameraParams) -> str:
    """Line-oriented key = value record of one camera calibration."""
    lines = [f"{k} = {v}" for k, v in asdict(cam).items()]
    return "\n".join(lines) + "\n"


def params_from_meta(text: str) -> CameraParams:
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    return CameraParams(
        n=float(fields["n"]),
        sigma_cc=float(fields["sigma_cc"]),
        v=float(fields["v"]),
        hue_shift=float(fields["hue_shift"]),
        sat_shift=float(fields["sat_shift"]),
        noise_sigma=float(fields["noise_sigma"]),
        flip=fields["flip"] in ("True", "true", "1"),
    )
