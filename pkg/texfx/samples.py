"""Synthetic exemplars for tests and the demo subcommand."""

import numpy as np
from matplotlib.colors import hsv_to_rgb
from scipy import ndimage

from .imagecore import RasterImage
from .textgeometry import analyze_text

GLYPHS = ("T", "L", "O", "H")


def mask_to_text(mask):
    """White text on black background."""
    return RasterImage(np.asarray(mask, dtype=np.float64))


def bar_mask(height, width, half_width, orientation="vertical", scale=1):
    """
    Straight bar of width 2*half_width+1 centred in a height x width canvas.

    The bar leaves a margin of a sixth of the long side at both ends. With
    scale > 1 the whole drawing is rasterized at that many times the size.
    """
    h, w = height * scale, width * scale
    mask = np.zeros((h, w), dtype=bool)
    if orientation == "vertical":
        cx = w // 2
        margin = h // 6
        mask[margin:h - margin, cx - half_width * scale:cx + half_width * scale + 1] = True
    elif orientation == "horizontal":
        cy = h // 2
        margin = w // 6
        mask[cy - half_width * scale:cy + half_width * scale + 1, margin:w - margin] = True
    else:
        raise ValueError(f"Unknown orientation: {orientation}")
    return mask


def disk_mask(size, radius):
    c = (size - 1) / 2.0
    ys, xs = np.mgrid[0:size, 0:size]
    return np.hypot(ys - c, xs - c) <= radius


def glyph_mask(name, size):
    """Block capital built from strokes of a size/8 pixel width."""
    stroke = max(2, size // 8)
    lo = size // 8
    hi = size - size // 8
    mask = np.zeros((size, size), dtype=bool)
    mid = size // 2
    if name == "T":
        mask[lo:lo + stroke, lo:hi] = True
        mask[lo:hi, mid - stroke // 2:mid - stroke // 2 + stroke] = True
    elif name == "L":
        mask[lo:hi, lo:lo + stroke] = True
        mask[hi - stroke:hi, lo:hi] = True
    elif name == "O":
        mask[lo:hi, lo:hi] = True
        mask[lo + stroke:hi - stroke, lo + stroke:hi - stroke] = False
    elif name == "H":
        mask[lo:hi, lo:lo + stroke] = True
        mask[lo:hi, hi - stroke:hi] = True
        mask[mid - stroke // 2:mid - stroke // 2 + stroke, lo:hi] = True
    else:
        raise ValueError(f"Unknown glyph '{name}', expected one of {', '.join(GLYPHS)}")
    return mask


def ring_mask(size, outer, inner):
    c = (size - 1) / 2.0
    ys, xs = np.mgrid[0:size, 0:size]
    r = np.hypot(ys - c, xs - c)
    return (r <= outer) & (r >= inner)


def _noise_texture(shape, seed, sigma=1.5):
    rng = np.random.default_rng(seed)
    noise = ndimage.gaussian_filter(rng.random(shape), sigma)
    noise -= noise.min()
    return noise / max(noise.max(), 1e-12)


def neon_ring_pair(size=192, seed=0):
    """
    A ring glyph and its neon rendering.

    The stylized image has a bright core, a coloured glow decaying with the
    distance to the glyph and a dim noisy background.
    """
    mask = ring_mask(size, outer=0.32 * size, inner=0.2 * size)
    outside = ndimage.distance_transform_edt(~mask)
    inside = ndimage.distance_transform_edt(mask)
    stroke = 0.06 * size

    glow = np.exp(-outside / (0.06 * size))
    core = np.clip(inside / stroke, 0.0, 1.0)
    background = 0.15 * _noise_texture((size, size), seed)

    style = np.empty((size, size, 3))
    style[..., 0] = background + 0.95 * glow * (1.0 - 0.3 * core) + 0.05 * core
    style[..., 1] = background * 0.6 + 0.35 * glow * mask + 0.6 * core
    style[..., 2] = background * 0.8 + 0.9 * glow
    return mask_to_text(mask), RasterImage(np.clip(style, 0.0, 1.0))


def hue_by_distance(mask, hue_range=(0.0, 0.8)):
    """Saturated colour whose hue increases with the normalized skeleton distance."""
    field = analyze_text(mask_to_text(mask)).field
    t = field.dist / max(field.max_distance, 1e-12)
    hue = hue_range[0] + t * (hue_range[1] - hue_range[0])
    hsv = np.stack([hue, np.ones_like(hue), np.ones_like(hue)], axis=-1)
    return RasterImage(np.clip(hsv_to_rgb(hsv), 0.0, 1.0))


def two_texture_split(mask, seed=0, period=6):
    """Fine colour noise inside the text, coarse periodic stripes outside."""
    rng = np.random.default_rng(seed)
    height, width = mask.shape
    noise = rng.random((height, width, 3))
    xs = np.arange(width)[None, :, None]
    stripes = np.broadcast_to(0.5 + 0.4 * np.sin(2 * np.pi * xs / period), (height, width, 3))
    tint = np.array([0.9, 0.7, 0.4])
    style = np.where(mask[..., None], noise, stripes * tint)
    return RasterImage(np.clip(style, 0.0, 1.0))


def tiled_texture(size, period, seed=0, channels=3):
    """Random tile repeated exactly every `period` pixels."""
    rng = np.random.default_rng(seed)
    tile = rng.random((period, period, channels))
    reps = -(-size // period)
    return RasterImage(np.tile(tile, (reps, reps, 1))[:size, :size])


def analysis_suite(size=64, glyph="L", seed=0):
    """
    Exemplar pairs for the partition study: hue by distance and the two-texture split.

    The glyph must not be rotationally symmetric about the image centre;
    otherwise angle partitions carry no more colour information than random ones.
    """
    mask = glyph_mask(glyph, size)
    text = mask_to_text(mask)
    return {
        "hue_by_distance": (text, hue_by_distance(mask)),
        "two_texture_split": (text, two_texture_split(mask, seed=seed)),
    }
