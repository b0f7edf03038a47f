"""Monocular-to-stereo conversion: forward warping, occlusion inpainting
and a mask-based hierarchical fusion refiner."""

from .config import PipelineConfig, load_config, parse_config
from .core import (
    ConfigError,
    DimensionMismatchError,
    DisparityMap,
    EdgeMap,
    FeatureMap,
    Frame,
    InputError,
    InvalidValueError,
    NumericError,
    OcclusionMask,
    StereoError,
)
from .disparity import canny_edges, depth_to_disparity, expand_disparity
from .inpaint import inpaint_de, inpaint_fallback, inpaint_poly, load_external_inpaint
from .metrics import evaluate_sequence, mae, psnr, ssim
from .warp import compose_anaglyph, compose_sbs, forward_warp, split_sbs

__version__ = "0.1.0"
