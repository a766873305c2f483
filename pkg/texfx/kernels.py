"""Compiled patch kernels.

Images enter as float64 arrays of shape (height, width, channels); patch
centres are (y, x) and always lie in the valid interior
[half, size - 1 - half]. Random numbers are drawn by the callers from a
seeded numpy Generator and passed in, so every kernel is deterministic.
"""

import math
from typing import NamedTuple

import numpy as np
import numba
from numba import njit, prange


class LevelArrays(NamedTuple):
    """Packed inputs for the synthesis kernels at one pyramid level.

    Axis 0 of the image stacks is the scale j of the joint appearance term
    (j = 0 is the current level); coarser levels sit in the top-left corner
    of the stack. The maps send a current-level row/column to its clamped
    patch centre at scale j.
    """

    src_text: np.ndarray
    src_style: np.ndarray
    tgt_text: np.ndarray
    tgt_style: np.ndarray
    src_ymap: np.ndarray
    src_xmap: np.ndarray
    tgt_ymap: np.ndarray
    tgt_xmap: np.ndarray
    weights: np.ndarray
    src_dist: np.ndarray
    tgt_dist: np.ndarray
    lambda1: float
    lambda2: float
    lambda3: float
    half: int


def set_threads(count):
    """Cap the worker threads of the parallel kernels (at most the configured pool size)."""
    numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


def search_radii(max_dim):
    """Random search radii: max_dim, max_dim/2, ... down to 1."""
    radii = []
    r = int(max_dim)
    while r >= 1:
        radii.append(r)
        r //= 2
    return np.array(radii, dtype=np.int64)


@njit(cache=True, nogil=True)
def clamp(value, lo, hi):
    if value < lo:
        return lo
    if value > hi:
        return hi
    return value


@njit(cache=True, nogil=True)
def patch_ssd(a, ay, ax, b, by, bx, half):
    """Mean squared difference over two (2*half+1)^2 patches."""
    channels = a.shape[2]
    total = 0.0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            for c in range(channels):
                diff = a[ay + dy, ax + dx, c] - b[by + dy, bx + dx, c]
                total += diff * diff
    side = 2 * half + 1
    return total / (side * side * channels)


@njit(cache=True, nogil=True)
def patch_variance(a, y, x, half):
    """Population variance over all pixels and channels of one patch."""
    channels = a.shape[2]
    side = 2 * half + 1
    n = side * side * channels
    mean = 0.0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            for c in range(channels):
                mean += a[y + dy, x + dx, c]
    mean /= n
    var = 0.0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            for c in range(channels):
                diff = a[y + dy, x + dx, c] - mean
                var += diff * diff
    return var / n


@njit(cache=True, nogil=True)
def patch_variances(a, qy, qx, half):
    out = np.empty(qy.shape[0])
    for i in range(qy.shape[0]):
        out[i] = patch_variance(a, qy[i], qx[i], half)
    return out


# ----------------------------------------------------------------------------
# Same-image matching (scale detection and response curves)
# ----------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def pair_cost(text, style, ay, ax, by, bx, half, exclusion):
    """Text + style SSD between two centres, inf inside the exclusion window."""
    if max(abs(ay - by), abs(ax - bx)) < exclusion:
        return np.inf
    return patch_ssd(text, ay, ax, text, by, bx, half) + patch_ssd(style, ay, ax, style, by, bx, half)


@njit(cache=True, parallel=True)
def self_match_exhaustive(text, style, qy, qx, half, exclusion):
    """Best admissible match for each query centre by full scan (raster-order ties)."""
    n = qy.shape[0]
    height = text.shape[0]
    width = text.shape[1]
    best_y = np.empty(n, dtype=np.int64)
    best_x = np.empty(n, dtype=np.int64)
    best_d = np.empty(n)
    for i in prange(n):
        y0 = qy[i]
        x0 = qx[i]
        bd = np.inf
        by = -1
        bx = -1
        for cy in range(half, height - half):
            for cx in range(half, width - half):
                d = pair_cost(text, style, y0, x0, cy, cx, half, exclusion)
                if d < bd:
                    bd = d
                    by = cy
                    bx = cx
        best_y[i] = by
        best_x[i] = bx
        best_d[i] = bd
    return best_y, best_x, best_d


@njit(cache=True, nogil=True)
def self_match_costs(text, style, half, exclusion, nn_y, nn_x, dist):
    height = text.shape[0]
    width = text.shape[1]
    for y in range(half, height - half):
        for x in range(half, width - half):
            dist[y, x] = pair_cost(text, style, y, x, nn_y[y, x], nn_x[y, x], half, exclusion)


@njit(cache=True, nogil=True)
def self_match_sweep(text, style, half, exclusion, nn_y, nn_x, dist, rand, radii, reverse):
    """One propagation + random-search pass of same-image PatchMatch, in place."""
    lo = half
    hi_y = text.shape[0] - 1 - half
    hi_x = text.shape[1] - 1 - half
    step = -1 if reverse else 1
    for i in range(lo, hi_y + 1):
        y = hi_y + lo - i if reverse else i
        for k in range(lo, hi_x + 1):
            x = hi_x + lo - k if reverse else k
            by = nn_y[y, x]
            bx = nn_x[y, x]
            bd = dist[y, x]

            ny = y - step
            if lo <= ny <= hi_y:
                cy = clamp(nn_y[ny, x] + step, lo, hi_y)
                cx = nn_x[ny, x]
                d = pair_cost(text, style, y, x, cy, cx, half, exclusion)
                if d < bd:
                    bd = d
                    by = cy
                    bx = cx
            nx = x - step
            if lo <= nx <= hi_x:
                cy = nn_y[y, nx]
                cx = clamp(nn_x[y, nx] + step, lo, hi_x)
                d = pair_cost(text, style, y, x, cy, cx, half, exclusion)
                if d < bd:
                    bd = d
                    by = cy
                    bx = cx

            for r_i in range(radii.shape[0]):
                r = radii[r_i]
                cy = clamp(by + int(math.floor(rand[y, x, r_i, 0] * (2 * r + 1))) - r, lo, hi_y)
                cx = clamp(bx + int(math.floor(rand[y, x, r_i, 1] * (2 * r + 1))) - r, lo, hi_x)
                if cy == by and cx == bx:
                    continue
                d = pair_cost(text, style, y, x, cy, cx, half, exclusion)
                if d < bd:
                    bd = d
                    by = cy
                    bx = cx

            nn_y[y, x] = by
            nn_x[y, x] = bx
            dist[y, x] = bd


# ----------------------------------------------------------------------------
# Guided synthesis
# ----------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def appearance(lv, ty, tx, sy, sx):
    """Posterior-weighted multi-scale text + style SSD between target pixel and source centre."""
    total = 0.0
    for j in range(lv.weights.shape[2]):
        w = lv.weights[ty, tx, j]
        if w == 0.0:
            continue
        py = lv.tgt_ymap[j, ty]
        px = lv.tgt_xmap[j, tx]
        qy = lv.src_ymap[j, sy]
        qx = lv.src_xmap[j, sx]
        text = patch_ssd(lv.tgt_text[j], py, px, lv.src_text[j], qy, qx, lv.half)
        style = patch_ssd(lv.tgt_style[j], py, px, lv.src_style[j], qy, qx, lv.half)
        total += w * (lv.lambda3 * text + style)
    return total


@njit(cache=True, nogil=True)
def distribution(dist_p, dist_q):
    diff = dist_p - dist_q
    return diff * diff / max(1.0, dist_p * dist_p)


@njit(cache=True, nogil=True)
def total_cost(lv, usage, ty, tx, sy, sx):
    cost = appearance(lv, ty, tx, sy, sx)
    if lv.lambda1 != 0.0:
        cost += lv.lambda1 * distribution(lv.tgt_dist[ty, tx], lv.src_dist[sy, sx])
    if lv.lambda2 != 0.0:
        cost += lv.lambda2 * usage[sy, sx]
    return cost


@njit(cache=True, parallel=True)
def field_costs(lv, nnf, usage, cost):
    for y in prange(nnf.shape[0]):
        for x in range(nnf.shape[1]):
            cost[y, x] = total_cost(lv, usage, y, x, nnf[y, x, 0], nnf[y, x, 1])


@njit(cache=True, nogil=True)
def patchmatch_sweep(lv, nnf, cost, usage, rand, radii, reverse):
    """
    One scanline sweep of propagation and random search over the target, in place.

    A candidate replaces the incumbent only when its total cost is strictly
    lower. Returns the number of accepted replacements.
    """
    height = nnf.shape[0]
    width = nnf.shape[1]
    lo = lv.half
    hi_y = lv.src_dist.shape[0] - 1 - lv.half
    hi_x = lv.src_dist.shape[1] - 1 - lv.half
    step = -1 if reverse else 1
    accepted = 0
    for i in range(height):
        y = height - 1 - i if reverse else i
        for k in range(width):
            x = width - 1 - k if reverse else k
            by = nnf[y, x, 0]
            bx = nnf[y, x, 1]
            bc = cost[y, x]

            ny = y - step
            if 0 <= ny < height:
                cy = clamp(nnf[ny, x, 0] + lv.tgt_ymap[0, y] - lv.tgt_ymap[0, ny], lo, hi_y)
                cx = nnf[ny, x, 1]
                if cy != by or cx != bx:
                    c = total_cost(lv, usage, y, x, cy, cx)
                    if c < bc:
                        bc = c
                        by = cy
                        bx = cx
                        accepted += 1
            nx = x - step
            if 0 <= nx < width:
                cy = nnf[y, nx, 0]
                cx = clamp(nnf[y, nx, 1] + lv.tgt_xmap[0, x] - lv.tgt_xmap[0, nx], lo, hi_x)
                if cy != by or cx != bx:
                    c = total_cost(lv, usage, y, x, cy, cx)
                    if c < bc:
                        bc = c
                        by = cy
                        bx = cx
                        accepted += 1

            for r_i in range(radii.shape[0]):
                r = radii[r_i]
                cy = clamp(by + int(math.floor(rand[y, x, r_i, 0] * (2 * r + 1))) - r, lo, hi_y)
                cx = clamp(bx + int(math.floor(rand[y, x, r_i, 1] * (2 * r + 1))) - r, lo, hi_x)
                if cy == by and cx == bx:
                    continue
                c = total_cost(lv, usage, y, x, cy, cx)
                if c < bc:
                    bc = c
                    by = cy
                    bx = cx
                    accepted += 1

            nnf[y, x, 0] = by
            nnf[y, x, 1] = bx
            cost[y, x] = bc
    return accepted


@njit(cache=True, parallel=True)
def exhaustive_field(lv, usage, nnf, cost):
    """Global per-pixel minimiser of the total cost (raster-order ties)."""
    lo = lv.half
    hi_y = lv.src_dist.shape[0] - 1 - lv.half
    hi_x = lv.src_dist.shape[1] - 1 - lv.half
    for y in prange(nnf.shape[0]):
        for x in range(nnf.shape[1]):
            bc = np.inf
            by = lo
            bx = lo
            for sy in range(lo, hi_y + 1):
                for sx in range(lo, hi_x + 1):
                    c = total_cost(lv, usage, y, x, sy, sx)
                    if c < bc:
                        bc = c
                        by = sy
                        bx = sx
            nnf[y, x, 0] = by
            nnf[y, x, 1] = bx
            cost[y, x] = bc


@njit(cache=True, nogil=True)
def vote(nnf, style, half, ymap, xmap):
    """Average the overlapping source patches predicted for every target pixel."""
    height = nnf.shape[0]
    width = nnf.shape[1]
    channels = style.shape[2]
    acc = np.zeros((height, width, channels))
    count = np.zeros((height, width))
    for y in range(height):
        cy = ymap[y]
        for x in range(width):
            cx = xmap[x]
            sy = nnf[y, x, 0]
            sx = nnf[y, x, 1]
            for dy in range(-half, half + 1):
                for dx in range(-half, half + 1):
                    for c in range(channels):
                        acc[cy + dy, cx + dx, c] += style[sy + dy, sx + dx, c]
                    count[cy + dy, cx + dx] += 1.0
    for y in range(height):
        for x in range(width):
            for c in range(channels):
                acc[y, x, c] /= count[y, x]
    return acc
