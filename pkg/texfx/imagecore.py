"""Raster images, resampling, pyramids and patch arithmetic."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ChannelMismatchError,
    DegenerateInputError,
    ImageDecodeError,
    ImageIOError,
    ImageNotFoundError,
    PatchTooLargeError,
    UnsupportedBitDepthError,
)

# Pillow modes that carry more than 8 bits per sample
_WIDE_MODES = {"I", "F", "I;16", "I;16B", "I;16L", "I;16N"}


def round_half_up(value):
    return int(math.floor(value + 0.5))


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Dense float image of shape (height, width, channels) with values in [0, 1].

    The pixel buffer is copied on construction and marked read-only.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ChannelMismatchError(f"Expected 1 or 3 channels, got array of shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DegenerateInputError(f"Image must be at least 1x1, got {data.shape[1]}x{data.shape[0]}")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise DegenerateInputError("Image values must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape


class PatchCoord(NamedTuple):
    """Patch centre in pixels; scale_index 1 is the finest scale."""

    x: int
    y: int
    scale_index: int = 1

    def at_scale(self, factor, scale_index=None):
        """Centre of the same patch on the image downsampled by factor^(scale_index-1)."""
        scale_index = self.scale_index if scale_index is None else scale_index
        divisor = factor ** (scale_index - 1)
        return PatchCoord(round_half_up(self.x / divisor), round_half_up(self.y / divisor), scale_index)


@dataclass(frozen=True)
class Pyramid:
    """Image levels ordered from coarsest to finest."""

    levels: tuple
    scale_ratios: tuple

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, index):
        return self.levels[index]

    @property
    def finest(self):
        return self.levels[-1]

    @property
    def coarsest(self):
        return self.levels[0]


def load_image(path):
    """
    Load an 8-bit gray or RGB PNG as a RasterImage scaled to [0, 1].

    Palette and bilevel images are expanded to RGB / gray; an alpha channel
    is dropped.
    """
    path = Path(path)
    if not path.exists():
        raise ImageNotFoundError(path)

    try:
        with Image.open(path) as im:
            im.load()
            if im.format != "PNG":
                raise ImageDecodeError(path, f"not a PNG but {im.format}")
            mode = im.mode
            if mode in _WIDE_MODES:
                raise UnsupportedBitDepthError(path, mode)
            if mode in ("1", "L", "LA"):
                im = im.convert("L")
            elif mode in ("P", "RGB", "RGBA"):
                im = im.convert("RGB")
            else:
                raise UnsupportedBitDepthError(path, mode)
            pixels = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as e:
        raise ImageDecodeError(path, str(e))

    return RasterImage(pixels)


def save_image(img, path):
    """Write a RasterImage as an 8-bit PNG (gray or RGB)."""
    path = Path(path)
    if not path.parent.exists():
        raise ImageIOError("Output directory does not exist", path.parent)

    pixels = np.rint(img.data * 255.0).astype(np.uint8)
    if img.channels == 1:
        pixels = pixels[:, :, 0]
    try:
        Image.fromarray(pixels).save(path, format="PNG")
    except OSError as e:
        raise ImageIOError(f"Cannot write image ({e})", path)
    return path


def to_luma(img):
    """Single-channel image holding the mean of the channels."""
    if img.channels == 1:
        return img
    return RasterImage(img.data.mean(axis=2, keepdims=True))


def _area_weights(n_in, n_out):
    # Output sample i averages the input signal over [i*r, (i+1)*r), pixels as unit cells.
    ratio = n_in / n_out
    edges = np.arange(n_out + 1, dtype=np.float64) * ratio
    lo = edges[:-1, None]
    hi = edges[1:, None]
    j = np.arange(n_in, dtype=np.float64)[None, :]
    overlap = np.clip(np.minimum(hi, j + 1.0) - np.maximum(lo, j), 0.0, None)
    return overlap / ratio


def resample_array(arr, height, width):
    """
    Box-filter resample a 2-D or 3-D array to (height, width).

    Each output pixel is the area average of the input cells it covers, so
    partially covered border cells enter with linear (bilinear) weights.
    """
    arr = np.asarray(arr, dtype=np.float64)
    if height < 1 or width < 1:
        raise DegenerateInputError(f"Resampled size must be at least 1x1, got {width}x{height}")
    if arr.shape[0] == height and arr.shape[1] == width:
        return arr.copy()
    wy = _area_weights(arr.shape[0], height)
    wx = _area_weights(arr.shape[1], width)
    return np.einsum("ih,hw...,jw->ij...", wy, arr, wx, optimize=True)


def resize(img, height, width):
    """Resample a RasterImage to an explicit size."""
    return RasterImage(np.clip(resample_array(img.data, height, width), 0.0, 1.0))


def downsample(img, factor):
    """Shrink an image by factor > 1; output size is round(size / factor)."""
    if factor <= 1:
        raise ValueError(f"Downsample factor must be > 1, got {factor}")
    height = round_half_up(img.height / factor)
    width = round_half_up(img.width / factor)
    if height < 1 or width < 1:
        raise DegenerateInputError(
            f"Downsampling {img.width}x{img.height} by {factor} leaves less than one pixel"
        )
    return resize(img, height, width)


def level_shape(height, width, ratio):
    return max(1, round_half_up(height * ratio)), max(1, round_half_up(width * ratio))


def pyramid_ratios(max_dim, depth, coarsest):
    """Per-level ratios relative to full resolution, coarsest first."""
    if depth == 1:
        return [1.0]
    step = (max_dim / coarsest) ** (1.0 / (depth - 1))
    ratios = [step ** -(depth - 1 - k) for k in range(depth)]
    ratios[0] = coarsest / max_dim
    ratios[-1] = 1.0
    return ratios


def feasible_depth(height, width, depth, coarsest, min_side=1):
    """
    Largest depth <= depth whose level sizes strictly increase and whose
    levels keep at least min_side pixels on the short side.
    """
    max_dim = max(height, width)
    for d in range(depth, 0, -1):
        shapes = [level_shape(height, width, r) for r in pyramid_ratios(max_dim, d, coarsest)]
        sizes = [max(s) for s in shapes]
        if all(a < b for a, b in zip(sizes, sizes[1:])) and min(shapes[0]) >= min_side:
            return d
    return 1


def build_pyramid(img, depth, coarsest, min_side=1):
    """
    Build a coarse-to-fine pyramid whose coarsest level has max dimension
    `coarsest` and whose finest level is the input image itself.

    The depth is capped where rounding would repeat a level size.
    """
    if depth < 1:
        raise ValueError(f"Pyramid depth must be >= 1, got {depth}")
    max_dim = max(img.height, img.width)
    if coarsest > max_dim:
        raise DegenerateInputError(f"Coarsest size {coarsest} exceeds image size {max_dim}")

    depth = feasible_depth(img.height, img.width, depth, coarsest, min_side)
    ratios = pyramid_ratios(max_dim, depth, coarsest)
    levels = [resize(img, *level_shape(img.height, img.width, r)) for r in ratios[:-1]]
    levels.append(img)
    return Pyramid(levels=tuple(levels), scale_ratios=tuple(ratios))


def clamp_center(y, x, height, width, m):
    """Clamp a patch centre so the m x m footprint stays inside the image."""
    half = m // 2
    if height < m or width < m:
        raise PatchTooLargeError(f"Patch size {m} does not fit a {width}x{height} image")
    return min(max(y, half), height - 1 - half), min(max(x, half), width - 1 - half)


def patch_ssd(img_a, p_a, img_b, p_b, m):
    """Mean squared difference between two m x m patches (centres clamped)."""
    if img_a.channels != img_b.channels:
        raise ChannelMismatchError(f"Channel mismatch: {img_a.channels} vs {img_b.channels}")
    half = m // 2
    ay, ax = clamp_center(p_a.y, p_a.x, img_a.height, img_a.width, m)
    by, bx = clamp_center(p_b.y, p_b.x, img_b.height, img_b.width, m)
    a = img_a.data[ay - half:ay + half + 1, ax - half:ax + half + 1]
    b = img_b.data[by - half:by + half + 1, bx - half:bx + half + 1]
    return float(np.mean((a - b) ** 2))


def psnr(a, b):
    """Peak signal-to-noise ratio in dB between two same-shape images."""
    if a.shape != b.shape:
        raise ChannelMismatchError(f"Shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
