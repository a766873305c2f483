"""Guided patch synthesis: objective, distribution-seeded init, PatchMatch and voting."""

import time
from dataclasses import dataclass, field

import click
import numpy as np

from . import kernels
from .config import INIT_CANDIDATES
from .errors import ChannelMismatchError, PatchTooLargeError, SizeMismatchError
from .imagecore import RasterImage, build_pyramid, feasible_depth, resample_array, to_luma
from .scalestats import source_statistics
from .textgeometry import analyze_text, bin_values


@dataclass(eq=False)
class NNField:
    """
    Correspondence field from target pixels to source patch centres.

    nnf has shape (height, width, 2) holding (y, x); cost caches the total
    patch cost per target pixel; usage counts how many target pixels map to
    each source centre.
    """

    nnf: np.ndarray
    cost: np.ndarray
    usage: np.ndarray

    @classmethod
    def from_nnf(cls, nnf, source_shape):
        nnf = np.ascontiguousarray(nnf, dtype=np.int64)
        f = cls(
            nnf=nnf,
            cost=np.full(nnf.shape[:2], np.inf),
            usage=np.zeros(source_shape, dtype=np.int64),
        )
        f.rebuild_usage()
        return f

    @property
    def shape(self):
        return self.nnf.shape[:2]

    def rebuild_usage(self):
        usage = np.zeros(self.usage.shape, dtype=np.int64)
        np.add.at(usage, (self.nnf[..., 0].ravel(), self.nnf[..., 1].ravel()), 1)
        self.usage = usage
        return usage

    def psycho_total(self):
        """Sum over target pixels of the usage count of their match."""
        return int(self.usage[self.nnf[..., 0], self.nnf[..., 1]].sum())

    def copy(self):
        return NNField(nnf=self.nnf.copy(), cost=self.cost.copy(), usage=self.usage.copy())


@dataclass(frozen=True, eq=False)
class SourceContext:
    """Source-side preprocessing, computed once per exemplar pair."""

    text: RasterImage
    style: RasterImage
    geometry: object
    statistics: object
    params: object
    _pyramids: dict = field(default_factory=dict, repr=False)

    def pyramids(self, depth, coarsest, min_side):
        key = (depth, coarsest, min_side)
        if key not in self._pyramids:
            self._pyramids[key] = (
                build_pyramid(self.text, depth, coarsest, min_side),
                build_pyramid(self.style, depth, coarsest, min_side),
            )
        return self._pyramids[key]


@dataclass(eq=False)
class TransferContext:
    """Per-target synthesis state; pyramid lists run coarse to fine."""

    params: object
    source: SourceContext
    target_geometry: object
    src_text: object
    src_style: object
    tgt_text: object
    src_dist: list
    tgt_dist: list
    tgt_bins: list
    bin_edges: np.ndarray
    posterior: np.ndarray
    rng: np.random.Generator
    tgt_style: list = None
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.tgt_style is None:
            self.tgt_style = [None] * self.depth

    @property
    def depth(self):
        return len(self.src_text)

    @property
    def channels(self):
        return self.src_style.finest.channels

    def source_shape(self, level):
        return self.src_text[level].height, self.src_text[level].width

    def target_shape(self, level):
        return self.tgt_text[level].height, self.tgt_text[level].width

    def active_scales(self, level):
        """Number of joint scales used at a pyramid level (1 is the level itself)."""
        if self.params.mode == "baseline":
            return 1
        return min(self.params.scales, level + 1)

    def set_target_style(self, level, img):
        self.tgt_style[level] = img

    def level_arrays(self, level, params=None):
        """Pack the kernel inputs for one level using the current target style estimates."""
        params = self.params if params is None else params
        half = params.patch_size // 2
        level = level % self.depth
        scales = self.active_scales(level)
        hs, ws = self.source_shape(level)
        ht, wt = self.target_shape(level)
        channels = self.channels

        src_text = np.zeros((scales, hs, ws, 1))
        src_style = np.zeros((scales, hs, ws, channels))
        tgt_text = np.zeros((scales, ht, wt, 1))
        tgt_style = np.zeros((scales, ht, wt, channels))
        src_ymap = np.zeros((scales, hs), dtype=np.int64)
        src_xmap = np.zeros((scales, ws), dtype=np.int64)
        tgt_ymap = np.zeros((scales, ht), dtype=np.int64)
        tgt_xmap = np.zeros((scales, wt), dtype=np.int64)

        for j in range(scales):
            k = level - j
            if self.tgt_style[k] is None:
                raise RuntimeError(f"Target style at pyramid level {k} has not been synthesized yet")
            st, ss = self.src_text[k].data, self.src_style[k].data
            tt, ts = self.tgt_text[k].data, self.tgt_style[k].data
            src_text[j, :st.shape[0], :st.shape[1]] = st
            src_style[j, :ss.shape[0], :ss.shape[1]] = ss
            tgt_text[j, :tt.shape[0], :tt.shape[1]] = tt
            tgt_style[j, :ts.shape[0], :ts.shape[1]] = ts
            src_ymap[j] = centre_map(hs, st.shape[0], half)
            src_xmap[j] = centre_map(ws, st.shape[1], half)
            tgt_ymap[j] = centre_map(ht, tt.shape[0], half)
            tgt_xmap[j] = centre_map(wt, tt.shape[1], half)

        return kernels.LevelArrays(
            src_text=src_text,
            src_style=src_style,
            tgt_text=tgt_text,
            tgt_style=tgt_style,
            src_ymap=src_ymap,
            src_xmap=src_xmap,
            tgt_ymap=tgt_ymap,
            tgt_xmap=tgt_xmap,
            weights=self.scale_weights(level, scales),
            src_dist=np.ascontiguousarray(self.src_dist[level]),
            tgt_dist=np.ascontiguousarray(self.tgt_dist[level]),
            lambda1=float(params.lambda1),
            lambda2=float(params.lambda2),
            lambda3=float(params.lambda3),
            half=int(half),
        )

    def scale_weights(self, level, scales):
        """Posterior P(scale | bin) renormalized over the level's scale window, shape (h, w, scales)."""
        ht, wt = self.target_shape(level)
        if self.posterior is None:
            return np.ones((ht, wt, 1))
        bins = self.tgt_bins[level]
        weights = np.moveaxis(self.posterior[:scales, bins], 0, -1).astype(np.float64)
        total = weights.sum(axis=-1, keepdims=True)
        empty = total[..., 0] <= 0
        # No posterior mass in the window: all weight on the coarsest available scale.
        weights[empty] = 0.0
        weights[empty, scales - 1] = 1.0
        total[empty] = 1.0
        return np.ascontiguousarray(weights / total)


@dataclass(frozen=True, eq=False)
class TransferResult:
    image: RasterImage
    field: NNField
    trace: list
    depth: int
    wall_time: float

    def level_objectives(self):
        """Objective after the last sweep of every pyramid level."""
        last = {}
        for entry in self.trace:
            last[entry["level"]] = entry["after"]
        return [last[k] for k in sorted(last)]


def centre_map(n_current, n_level, half):
    """Clamped centre at a level of size n_level for every index of a size-n_current axis."""
    idx = np.floor((np.arange(n_current) + 0.5) * (n_level / n_current)).astype(np.int64)
    return np.clip(idx, half, n_level - 1 - half)


def single_scale_arrays(source_text, source_style, target_text, target_style, params,
                        source_dist=None, target_dist=None):
    """Kernel inputs for one-scale matching of explicit images (distances default to zero)."""
    half = params.patch_size // 2
    hs, ws = source_text.height, source_text.width
    ht, wt = target_text.height, target_text.width
    if source_style.channels != target_style.channels:
        raise ChannelMismatchError(
            f"Style channel mismatch: {source_style.channels} vs {target_style.channels}"
        )
    return kernels.LevelArrays(
        src_text=np.ascontiguousarray(to_luma(source_text).data[None]),
        src_style=np.ascontiguousarray(source_style.data[None]),
        tgt_text=np.ascontiguousarray(to_luma(target_text).data[None]),
        tgt_style=np.ascontiguousarray(target_style.data[None]),
        src_ymap=centre_map(hs, hs, half)[None],
        src_xmap=centre_map(ws, ws, half)[None],
        tgt_ymap=centre_map(ht, ht, half)[None],
        tgt_xmap=centre_map(wt, wt, half)[None],
        weights=np.ones((ht, wt, 1)),
        src_dist=np.zeros((hs, ws)) if source_dist is None else np.ascontiguousarray(source_dist, dtype=np.float64),
        tgt_dist=np.zeros((ht, wt)) if target_dist is None else np.ascontiguousarray(target_dist, dtype=np.float64),
        lambda1=float(params.lambda1),
        lambda2=float(params.lambda2),
        lambda3=float(params.lambda3),
        half=int(half),
    )


def _require_patch_fits(img, patch_size, role):
    if min(img.height, img.width) < patch_size:
        raise PatchTooLargeError(
            f"{role} {img.width}x{img.height} is smaller than a {patch_size}x{patch_size} patch"
        )


def prepare_source(text_img, style_img, params, verbose=False):
    """Distance field and, in full mode, scale statistics of the exemplar pair."""
    if text_img.height != style_img.height or text_img.width != style_img.width:
        raise SizeMismatchError(
            f"Source text {text_img.width}x{text_img.height} and style "
            f"{style_img.width}x{style_img.height} differ in size"
        )
    _require_patch_fits(text_img, params.patch_size, "Source")
    if verbose:
        click.echo("  Analyzing source text...")
    geometry = analyze_text(text_img, params.threshold, params.outlier_fraction)
    statistics = None
    if params.mode == "full":
        if verbose:
            click.echo("  Detecting optimal patch scales...")
        statistics = source_statistics(text_img, style_img, geometry, params, verbose=verbose)
    return SourceContext(
        text=to_luma(text_img),
        style=style_img,
        geometry=geometry,
        statistics=statistics,
        params=params,
    )


def _level_fields(dist, pyramid):
    return [resample_array(dist, lvl.height, lvl.width) for lvl in pyramid.levels]


def build_context(source, target_img, params, seed=None):
    """Pyramids, per-level distance fields and posterior for one target."""
    seed = params.seed if seed is None else seed
    m = params.patch_size
    _require_patch_fits(target_img, m, "Target")
    target_text = to_luma(target_img)
    target_geometry = analyze_text(target_img, params.threshold, params.outlier_fraction)

    sh, sw = source.text.height, source.text.width
    th, tw = target_text.height, target_text.width
    coarsest = min(params.coarsest, max(sh, sw), max(th, tw))
    depth = min(
        feasible_depth(sh, sw, params.pyramid_depth, coarsest, m),
        feasible_depth(th, tw, params.pyramid_depth, coarsest, m),
    )
    while True:
        src_text, src_style = source.pyramids(depth, coarsest, m)
        tgt_text = build_pyramid(target_text, depth, coarsest, m)
        if len(src_text) == len(tgt_text):
            break
        depth = min(len(src_text), len(tgt_text))

    edges = source.geometry.field.bin_edges
    tgt_dist = _level_fields(target_geometry.field.dist, tgt_text)
    posterior = None if source.statistics is None else source.statistics.posterior.posterior

    return TransferContext(
        params=params,
        source=source,
        target_geometry=target_geometry,
        src_text=src_text,
        src_style=src_style,
        tgt_text=tgt_text,
        src_dist=_level_fields(source.geometry.field.dist, src_text),
        tgt_dist=tgt_dist,
        tgt_bins=[bin_values(edges, d) for d in tgt_dist],
        bin_edges=edges,
        posterior=posterior,
        rng=np.random.default_rng(seed),
    )


def _coord(ctx, level, p, source):
    h, w = ctx.source_shape(level) if source else ctx.target_shape(level)
    half = ctx.params.patch_size // 2
    y, x = int(p.y), int(p.x)
    if not (0 <= y < h and 0 <= x < w):
        raise ValueError(f"Pixel ({x}, {y}) outside the {w}x{h} image")
    if source and not (half <= y < h - half and half <= x < w - half):
        raise ValueError(f"({x}, {y}) is not a valid source patch centre")
    return y, x


def appearance_cost(ctx, p, q, level=-1):
    """Multi-scale text + style SSD between target pixel p and source centre q."""
    lv = ctx.level_arrays(level)
    ty, tx = _coord(ctx, level % ctx.depth, p, source=False)
    sy, sx = _coord(ctx, level % ctx.depth, q, source=True)
    return float(kernels.appearance(lv, ty, tx, sy, sx))


def distribution_cost(dist_p, dist_q):
    return float(kernels.distribution(float(dist_p), float(dist_q)))


def psycho_cost(usage_q):
    if usage_q < 0:
        raise ValueError(f"Usage count must be >= 0, got {usage_q}")
    return usage_q


def total_cost(ctx, params, p, q, usage, level=-1):
    lv = ctx.level_arrays(level, params)
    ty, tx = _coord(ctx, level % ctx.depth, p, source=False)
    sy, sx = _coord(ctx, level % ctx.depth, q, source=True)
    return float(kernels.total_cost(lv, np.asarray(usage, dtype=np.int64), ty, tx, sy, sx))


def refresh_costs(ctx, nn_field, level, params=None):
    """Recompute the cached cost of every target pixel against the current state."""
    lv = ctx.level_arrays(level, params)
    kernels.field_costs(lv, nn_field.nnf, nn_field.usage, nn_field.cost)
    return nn_field


def vote(nn_field, source_style, m):
    """Average the style pixels predicted by every patch covering each target pixel."""
    h, w = nn_field.shape
    half = m // 2
    out = kernels.vote(
        nn_field.nnf,
        np.ascontiguousarray(source_style.data),
        half,
        centre_map(h, h, half),
        centre_map(w, w, half),
    )
    return RasterImage(np.clip(out, 0.0, 1.0))


def _vote_level(ctx, nn_field, level):
    img = vote(nn_field, ctx.src_style[level], ctx.params.patch_size)
    ctx.set_target_style(level, img)
    return img


def _valid_source_centres(ctx, level):
    h, w = ctx.source_shape(level)
    half = ctx.params.patch_size // 2
    ys, xs = np.mgrid[half:h - half, half:w - half]
    return ys.ravel(), xs.ravel()


def init_by_distribution(ctx, rng=None, level=0, exhaustive=False):
    """
    Seed the field by matching skeleton distances only.

    Each target pixel draws INIT_CANDIDATES source centres from the pixels
    in its own distance bin (or the nearest non-empty bin) and keeps the one
    with the lowest distribution cost. With exhaustive=True every valid
    source centre is a candidate. The voted estimate becomes the level's
    target style. Returns (field, target style).
    """
    rng = ctx.rng if rng is None else rng
    ht, wt = ctx.target_shape(level)
    sys_, sxs = _valid_source_centres(ctx, level)
    src_d = ctx.src_dist[level][sys_, sxs]
    tgt_d = ctx.tgt_dist[level]
    nnf = np.empty((ht, wt, 2), dtype=np.int64)

    if exhaustive:
        dp = tgt_d.reshape(-1, 1)
        costs = (dp - src_d[None, :]) ** 2 / np.maximum(1.0, dp ** 2)
        best = np.argmin(costs, axis=1)
        nnf[..., 0] = sys_[best].reshape(ht, wt)
        nnf[..., 1] = sxs[best].reshape(ht, wt)
    else:
        src_bins = bin_values(ctx.bin_edges, src_d)
        tgt_bins = ctx.tgt_bins[level]
        filled = np.unique(src_bins)
        for b in np.unique(tgt_bins):
            pool_bin = filled[np.argmin(np.abs(filled - b))]
            pool = np.flatnonzero(src_bins == pool_bin)
            ty, tx = np.nonzero(tgt_bins == b)
            picks = pool[rng.integers(0, len(pool), size=(len(ty), INIT_CANDIDATES))]
            dp = tgt_d[ty, tx][:, None]
            costs = (dp - src_d[picks]) ** 2 / np.maximum(1.0, dp ** 2)
            best = picks[np.arange(len(ty)), np.argmin(costs, axis=1)]
            nnf[ty, tx, 0] = sys_[best]
            nnf[ty, tx, 1] = sxs[best]

    nn_field = NNField.from_nnf(nnf, ctx.source_shape(level))
    img = _vote_level(ctx, nn_field, level)
    refresh_costs(ctx, nn_field, level)
    return nn_field, img


def level_objective(ctx, nn_field, level, params=None):
    """Total objective of a field against the level's current target style and its own usage."""
    refresh_costs(ctx, nn_field, level, params)
    return float(nn_field.cost.sum())


def patchmatch_step(ctx, params, nn_field, iteration_parity, level=-1):
    """
    One propagation + random search sweep followed by a vote.

    Usage counts stay frozen during the sweep and are rebuilt afterwards;
    the voted estimate replaces the level's target style. The objective is
    evaluated before and after in that consistent state. A step that raises
    it is rolled back: the input field and the previous target style are
    kept. Each step appends one entry to ctx.trace.
    """
    level = level % ctx.depth
    current = nn_field.copy()
    current.rebuild_usage()
    before = level_objective(ctx, current, level, params)

    lv = ctx.level_arrays(level, params)
    out = current.copy()
    hs, ws = ctx.source_shape(level)
    radii = kernels.search_radii(max(hs, ws))
    rand = ctx.rng.random(out.shape + (len(radii), 2))
    accepted = kernels.patchmatch_sweep(lv, out.nnf, out.cost, out.usage, rand, radii, iteration_parity % 2 == 1)
    out.rebuild_usage()

    previous_style = ctx.tgt_style[level]
    _vote_level(ctx, out, level)
    candidate = level_objective(ctx, out, level, params)
    kept = candidate <= before
    if not kept:
        ctx.set_target_style(level, previous_style)
        out = current

    ctx.trace.append({
        "level": level,
        "sweep": sum(1 for e in ctx.trace if e["level"] == level),
        "before": before,
        "after": candidate if kept else before,
        "candidate": candidate,
        "accepted": int(accepted),
        "kept": bool(kept),
    })
    return out


def upsample_field(ctx, nn_field, level, rng=None):
    """
    Carry a field from pyramid level-1 to level.

    Source coordinates are scaled with the sub-pixel offset of each target
    pixel inside its coarse parent, jittered by up to one pixel and clamped.
    The voted result becomes the level's target style and costs are
    recomputed.
    """
    rng = ctx.rng if rng is None else rng
    half = ctx.params.patch_size // 2
    hp, wp = ctx.target_shape(level - 1)
    ht, wt = ctx.target_shape(level)
    hsp, wsp = ctx.source_shape(level - 1)
    hs, ws = ctx.source_shape(level)

    yc = (np.arange(ht) + 0.5) * (hp / ht) - 0.5
    xc = (np.arange(wt) + 0.5) * (wp / wt) - 0.5
    yi = np.clip(np.floor(yc + 0.5).astype(np.int64), 0, hp - 1)
    xi = np.clip(np.floor(xc + 0.5).astype(np.int64), 0, wp - 1)

    parent = nn_field.nnf[yi[:, None], xi[None, :]]
    sy = (parent[..., 0] + (yc - yi)[:, None] + 0.5) * (hs / hsp) - 0.5
    sx = (parent[..., 1] + (xc - xi)[None, :] + 0.5) * (ws / wsp) - 0.5
    jitter = rng.integers(-1, 2, size=(ht, wt, 2))

    nnf = np.empty((ht, wt, 2), dtype=np.int64)
    nnf[..., 0] = np.clip(np.floor(sy + 0.5).astype(np.int64) + jitter[..., 0], half, hs - 1 - half)
    nnf[..., 1] = np.clip(np.floor(sx + 0.5).astype(np.int64) + jitter[..., 1], half, ws - 1 - half)

    out = NNField.from_nnf(nnf, (hs, ws))
    _vote_level(ctx, out, level)
    refresh_costs(ctx, out, level)
    return out


def exhaustive_match(ctx, params, usage, level=-1):
    """Per-pixel global minimiser of the total cost under fixed usage counts."""
    level = level % ctx.depth
    lv = ctx.level_arrays(level, params)
    ht, wt = ctx.target_shape(level)
    nnf = np.empty((ht, wt, 2), dtype=np.int64)
    cost = np.empty((ht, wt))
    usage = np.ascontiguousarray(usage, dtype=np.int64)
    kernels.exhaustive_field(lv, usage, nnf, cost)
    out = NNField.from_nnf(nnf, ctx.source_shape(level))
    out.cost = cost
    return out


def random_field(target_shape, source_shape, patch_size, rng):
    """Uniformly random valid correspondences."""
    half = patch_size // 2
    nnf = np.empty(tuple(target_shape) + (2,), dtype=np.int64)
    nnf[..., 0] = rng.integers(half, source_shape[0] - half, size=target_shape)
    nnf[..., 1] = rng.integers(half, source_shape[1] - half, size=target_shape)
    return NNField.from_nnf(nnf, source_shape)


def transfer(source_text, source_style, target_text, params, source=None, seed=None, verbose=False):
    """
    Synthesize the stylized target T' for target text T from the pair (S, S').

    A precomputed SourceContext may be passed to share source preprocessing
    between targets; results are identical either way.
    """
    started = time.perf_counter()
    if source is None:
        source = prepare_source(source_text, source_style, params, verbose=verbose)

    ctx = build_context(source, target_text, params, seed=seed)
    if verbose:
        click.echo(f"  Pyramid: {ctx.depth} levels, target {ctx.tgt_text.finest.width}x{ctx.tgt_text.finest.height}")

    nn_field, _ = init_by_distribution(ctx, level=0)
    for level in range(ctx.depth):
        if level > 0:
            nn_field = upsample_field(ctx, nn_field, level)
        for it in range(params.iterations):
            nn_field = patchmatch_step(ctx, params, nn_field, it, level=level)
        if verbose:
            click.echo(f"  level {level + 1}/{ctx.depth}: objective {ctx.trace[-1]['after']:.4f}")

    return TransferResult(
        image=ctx.tgt_style[-1],
        field=nn_field,
        trace=list(ctx.trace),
        depth=ctx.depth,
        wall_time=time.perf_counter() - started,
    )
