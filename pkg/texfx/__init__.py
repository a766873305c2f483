"""texfx - Transfer designer text effects onto new text by guided patch synthesis."""

from .config import SynthesisParams, JobConfig, load_params
from .errors import (
    ConfigError,
    ImageIOError,
    DegenerateInputError,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_IO,
    EXIT_DEGENERATE,
)
from .imagecore import RasterImage, PatchCoord, Pyramid, load_image, save_image, build_pyramid, patch_ssd
from .textgeometry import analyze_text, binarize, skeletonize, normalized_distance_field
from .scalestats import detect_optimal_scales, estimate_posterior, source_statistics
from .synthesis import NNField, prepare_source, transfer, vote
from .analysis import analyze_image, make_partition
from .cli import main

__all__ = [
    "SynthesisParams",
    "JobConfig",
    "load_params",
    "ConfigError",
    "ImageIOError",
    "DegenerateInputError",
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_IO",
    "EXIT_DEGENERATE",
    "RasterImage",
    "PatchCoord",
    "Pyramid",
    "load_image",
    "save_image",
    "build_pyramid",
    "patch_ssd",
    "analyze_text",
    "binarize",
    "skeletonize",
    "normalized_distance_field",
    "detect_optimal_scales",
    "estimate_posterior",
    "source_statistics",
    "NNField",
    "prepare_source",
    "transfer",
    "vote",
    "analyze_image",
    "make_partition",
    "main",
]
