"""Optimal patch scale detection and the joint scale/distance statistics."""

from dataclasses import dataclass

import click
import numpy as np

from . import kernels
from .config import BIN_COUNT, EXHAUSTIVE_PIXEL_LIMIT, SELF_MATCH_ITERATIONS, STATISTICS_SEED
from .errors import EmptyHistogramError, PatchTooLargeError, SizeMismatchError
from .imagecore import PatchCoord, downsample, round_half_up, to_luma


@dataclass(frozen=True, eq=False)
class ScaleStack:
    """Source text (luma) and style images at scales 1..levels; level 1 is full resolution."""

    text_levels: tuple
    style_levels: tuple
    factor: float
    patch_size: int
    requested_levels: int

    @property
    def levels(self):
        return len(self.text_levels)

    @property
    def half(self):
        return self.patch_size // 2

    def level(self, index):
        """(text, style) images at 1-based scale index."""
        return self.text_levels[index - 1], self.style_levels[index - 1]


@dataclass(frozen=True, eq=False)
class ScaleMap:
    scal: np.ndarray
    levels: int


@dataclass(frozen=True, eq=False)
class ScalePosterior:
    joint: np.ndarray
    posterior: np.ndarray

    @property
    def levels(self):
        return self.joint.shape[0]


@dataclass(frozen=True, eq=False)
class SourceStatistics:
    stack: ScaleStack
    scale_map: ScaleMap
    histogram: np.ndarray
    posterior: ScalePosterior


def build_scale_stack(text_img, style_img, levels, factor, patch_size):
    """
    Downsample the source pair by factor^(l-1) for l = 1..levels.

    Levels stop at the first one whose short side is below patch_size.
    Centres of a kept level may still have no admissible match under the
    exclusion window; detection flags them.
    """
    if text_img.height != style_img.height or text_img.width != style_img.width:
        raise SizeMismatchError(
            f"Source text {text_img.width}x{text_img.height} and style "
            f"{style_img.width}x{style_img.height} differ in size"
        )
    if min(text_img.height, text_img.width) < patch_size:
        raise PatchTooLargeError(
            f"Source {text_img.width}x{text_img.height} is smaller than a {patch_size}x{patch_size} patch"
        )
    text = to_luma(text_img)
    texts = [text]
    styles = [style_img]
    for level in range(2, levels + 1):
        div = factor ** (level - 1)
        if round_half_up(min(text.height, text.width) / div) < patch_size:
            break
        small_text = downsample(text, div)
        if min(small_text.height, small_text.width) < patch_size:
            break
        texts.append(small_text)
        styles.append(downsample(style_img, div))

    return ScaleStack(
        text_levels=tuple(texts),
        style_levels=tuple(styles),
        factor=factor,
        patch_size=patch_size,
        requested_levels=levels,
    )


def level_centers(stack, level, ys, xs):
    """Full-resolution pixels -> clamped patch centres at the given scale (rounded to nearest)."""
    text, _ = stack.level(level)
    div = stack.factor ** (level - 1)
    half = stack.half
    cy = np.floor(np.asarray(ys) / div + 0.5).astype(np.int64)
    cx = np.floor(np.asarray(xs) / div + 0.5).astype(np.int64)
    return (
        np.clip(cy, half, text.height - 1 - half),
        np.clip(cx, half, text.width - 1 - half),
    )


def _valid_centers(height, width, half):
    ys, xs = np.mgrid[half:height - half, half:width - half]
    return ys.ravel().astype(np.int64), xs.ravel().astype(np.int64)


def self_match(text, style, patch_size, rng=None, method="auto", exclusion=None, queries=None):
    """
    Best match on the same image for each query centre.

    Candidates within Chebyshev distance `exclusion` (default: the patch
    size) of the query are not admissible. The cost is the sum of the text
    and style mean SSDs. method is "exhaustive", "patchmatch" or "auto"
    (exhaustive up to 64x64 pixels). Returns (match_y, match_x, dist) aligned
    with the queries; dist is inf where no admissible candidate exists.
    """
    half = patch_size // 2
    exclusion = patch_size if exclusion is None else exclusion
    t = np.ascontiguousarray(text.data)
    s = np.ascontiguousarray(style.data)
    height, width = t.shape[:2]

    if queries is None:
        qy, qx = _valid_centers(height, width, half)
    else:
        qy = np.ascontiguousarray(queries[0], dtype=np.int64)
        qx = np.ascontiguousarray(queries[1], dtype=np.int64)

    if method == "auto":
        method = "exhaustive" if height * width <= EXHAUSTIVE_PIXEL_LIMIT else "patchmatch"

    if method == "exhaustive":
        return kernels.self_match_exhaustive(t, s, qy, qx, half, exclusion)
    if method != "patchmatch":
        raise ValueError(f"Unknown matching method: {method}")

    rng = np.random.default_rng(STATISTICS_SEED) if rng is None else rng
    nn_y = rng.integers(half, height - half, size=(height, width)).astype(np.int64)
    nn_x = rng.integers(half, width - half, size=(height, width)).astype(np.int64)
    dist = np.full((height, width), np.inf)
    kernels.self_match_costs(t, s, half, exclusion, nn_y, nn_x, dist)

    radii = kernels.search_radii(max(height, width))
    for it in range(SELF_MATCH_ITERATIONS):
        rand = rng.random((height, width, len(radii), 2))
        kernels.self_match_sweep(t, s, half, exclusion, nn_y, nn_x, dist, rand, radii, it % 2 == 1)

    return nn_y[qy, qx], nn_x[qy, qx], dist[qy, qx]


def best_match_at_scale(stack, level, q, method="exhaustive", rng=None):
    """
    Best same-image correspondence of full-resolution pixel q at a scale.

    Returns (q_hat, d) with q_hat a PatchCoord in that scale's pixels, or
    (None, inf) when no admissible candidate exists.
    """
    text, style = stack.level(level)
    cy, cx = level_centers(stack, level, [q.y], [q.x])
    my, mx, d = self_match(text, style, stack.patch_size, rng=rng, method=method, queries=(cy, cx))
    if not np.isfinite(d[0]):
        return None, float("inf")
    return PatchCoord(int(mx[0]), int(my[0]), level), float(d[0])


def detect_optimal_scales(stack, omega, rng=None, method="auto", verbose=False):
    """
    Assign every source pixel the coarsest scale at which its patch finds a
    good enough match on its own image.

    Scales are visited from coarsest to 2; a pixel retires at scale l as
    soon as sigma_l + sqrt(d_l) <= omega, where sigma_l is half the standard
    deviation of its stylized patch. Survivors keep scale 1; pixels with no
    admissible match retire at the requested coarsest scale L, whether or not
    the stack holds that many levels.
    """
    rng = np.random.default_rng(STATISTICS_SEED) if rng is None else rng
    height, width = stack.text_levels[0].height, stack.text_levels[0].width
    scal = np.ones((height, width), dtype=np.int64)
    active = np.ones((height, width), dtype=bool)
    ys, xs = np.mgrid[0:height, 0:width]

    for level in range(stack.levels, 1, -1):
        if not active.any():
            break
        text, style = stack.level(level)
        cy, cx = level_centers(stack, level, ys[active], xs[active])

        # Pixels sharing a centre share the match; evaluate each centre once.
        flat = cy * text.width + cx
        unique, inverse = np.unique(flat, return_inverse=True)
        qy = unique // text.width
        qx = unique % text.width

        _, _, d = self_match(text, style, stack.patch_size, rng=rng, method=method, queries=(qy, qx))
        sigma = np.sqrt(kernels.patch_variances(np.ascontiguousarray(style.data), qy, qx, stack.half)) / 2.0
        flagged = ~np.isfinite(d)
        passes = (sigma + np.sqrt(np.where(flagged, 0.0, d))) > omega

        retire_level = np.where(flagged, stack.requested_levels, level)
        retire = (~passes | flagged)[inverse.ravel()]

        active_idx = np.flatnonzero(active)
        retired_idx = active_idx[retire]
        scal.ravel()[retired_idx] = retire_level[inverse.ravel()][retire]
        active.ravel()[retired_idx] = False

        if verbose:
            click.echo(f"  scale {level}: {len(retired_idx)} pixels retired, {int(active.sum())} remain")

    return ScaleMap(scal=scal, levels=stack.requested_levels)


def scale_distance_histogram(sm, df):
    """Count pixels per (scale, distance bin) cell."""
    if sm.scal.shape != df.bins.shape:
        raise SizeMismatchError(f"Scale map {sm.scal.shape} and distance field {df.bins.shape} differ")
    hist = np.zeros((sm.levels, BIN_COUNT), dtype=np.int64)
    np.add.at(hist, (sm.scal.ravel() - 1, df.bins.ravel()), 1)
    return hist


def estimate_posterior(hist):
    """
    Joint P(l, x) and posterior P(l | x) from the histogram.

    Columns without support copy the nearest supported column (ties go to
    the lower bin).
    """
    hist = np.asarray(hist, dtype=np.float64)
    total = hist.sum()
    if total <= 0:
        raise EmptyHistogramError("Scale/distance histogram is empty")

    joint = hist / total
    support = joint.sum(axis=0)
    supported = np.flatnonzero(support > 0)
    posterior = np.zeros_like(joint)
    posterior[:, supported] = joint[:, supported] / support[supported]
    for x in np.flatnonzero(support <= 0):
        nearest = supported[np.argmin(np.abs(supported - x))]
        posterior[:, x] = posterior[:, nearest]

    return ScalePosterior(joint=joint, posterior=posterior)


def source_statistics(text_img, style_img, geometry, params, rng=None, verbose=False):
    """Scale stack, scale map, histogram and posterior of a source pair."""
    stack = build_scale_stack(text_img, style_img, params.scales, params.scale_factor, params.patch_size)
    if verbose:
        click.echo(f"  scale stack: {stack.levels} of {stack.requested_levels} scales usable")
    scale_map = detect_optimal_scales(stack, params.omega, rng=rng, verbose=verbose)
    hist = scale_distance_histogram(scale_map, geometry.field)
    return SourceStatistics(
        stack=stack,
        scale_map=scale_map,
        histogram=hist,
        posterior=estimate_posterior(hist),
    )
