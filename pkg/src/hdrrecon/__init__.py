"""Single-exposure HDR reconstruction toolkit."""

from .camera import (
    AugmentConfig,
    CameraParams,
    CropSpec,
    TrainingPair,
    augment,
    camera_curve,
    clip_quantize,
    exposure_scale,
    filter_unsaturated,
    inverse_camera_curve,
    sample_camera,
    sample_crops,
    simulate_hdr,
)
from .codecs import read_hdr, read_ldr, write_hdr, write_ldr
from .image import (
    Histogram,
    ImageHDR,
    ImageLDR,
    histogram,
    hsv_to_rgb,
    luminance,
    quantile,
    resample_bilinear,
    rgb_to_hsv,
)
from .losses import (
    LossConfig,
    blend_mask,
    decompose_ir,
    direct_loss,
    gaussian_blur,
    ir_loss,
)
from .network import (
    AdamState,
    Network,
    NetworkConfig,
    adam_step,
    load_weights,
    preset_config,
    save_weights,
)
from .reconstruct import ReconstructionConfig, linearize, pad_to_multiple, predict, residual
from .training import train

__version__ = "0.1.0"
