import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from texfx import samples
from texfx.config import BIN_COUNT, SynthesisParams
from texfx.errors import EmptyHistogramError, PatchTooLargeError, SizeMismatchError
from texfx.imagecore import PatchCoord, RasterImage, round_half_up, to_luma
from texfx.scalestats import (
    ScaleMap,
    best_match_at_scale,
    build_scale_stack,
    detect_optimal_scales,
    estimate_posterior,
    scale_distance_histogram,
    self_match,
    source_statistics,
)
from texfx.textgeometry import analyze_text


def _pair(style):
    return to_luma(style), style


def _brute_match(text, style, y, x, m):
    """Best admissible same-image match of centre (y, x) by a full vectorized scan."""
    half = m // 2
    tw = sliding_window_view(text.data, (m, m), axis=(0, 1))
    sw = sliding_window_view(style.data, (m, m), axis=(0, 1))
    d = ((tw - tw[y - half, x - half]) ** 2).mean(axis=(2, 3, 4)) + (
        (sw - sw[y - half, x - half]) ** 2
    ).mean(axis=(2, 3, 4))
    cy, cx = np.mgrid[half:text.height - half, half:text.width - half]
    d[np.maximum(np.abs(cy - y), np.abs(cx - x)) < m] = np.inf
    return float(d.min())


def _literal_scale_detection(stack, omega):
    """Direct transcription of the coarse-to-fine scale filter, one pixel at a time."""
    m = stack.patch_size
    half = m // 2
    height, width = stack.text_levels[0].height, stack.text_levels[0].width
    scal = np.ones((height, width), dtype=int)
    remaining = {(y, x) for y in range(height) for x in range(width)}
    for level in range(stack.levels, 1, -1):
        text, style = stack.level(level)
        div = stack.factor ** (level - 1)
        cache = {}
        for y, x in sorted(remaining):
            cy = min(max(round_half_up(y / div), half), text.height - 1 - half)
            cx = min(max(round_half_up(x / div), half), text.width - 1 - half)
            if (cy, cx) not in cache:
                d = _brute_match(text, style, cy, cx, m)
                patch = style.data[cy - half:cy + half + 1, cx - half:cx + half + 1]
                sigma = np.sqrt(patch.var()) / 2
                cache[(cy, cx)] = (sigma, d)
            sigma, d = cache[(cy, cx)]
            if not np.isfinite(d):
                scal[y, x] = stack.requested_levels
                remaining.discard((y, x))
            elif not (sigma + np.sqrt(d) > omega):
                scal[y, x] = level
                remaining.discard((y, x))
    return scal


def _mixed_pair(seed):
    rng = np.random.default_rng(seed)
    split = rng.integers(8, 24)
    style = np.full((32, 32, 3), rng.random(3))
    style[:, split:] = rng.random((32, 32 - split, 3)) * rng.uniform(0.2, 0.8)
    text = np.zeros((32, 32))
    y0, x0 = rng.integers(4, 14, 2)
    text[y0:y0 + 12, x0:x0 + 10] = 1.0
    return RasterImage(text), RasterImage(np.clip(style, 0, 1))


def test_stack_keeps_levels_at_least_one_patch_wide():
    text, style = _pair(samples.tiled_texture(64, 8))
    stack = build_scale_stack(text, style, levels=5, factor=2.0, patch_size=5)
    assert stack.levels == 4
    assert stack.requested_levels == 5
    assert [t.width for t in stack.text_levels] == [64, 32, 16, 8]


def test_stack_reaches_every_scale_at_defaults(neon_pair):
    text, style = neon_pair
    params = SynthesisParams()
    stack = build_scale_stack(text, style, params.scales, params.scale_factor, params.patch_size)
    assert stack.levels == 5
    assert [t.width for t in stack.text_levels] == [192, 96, 48, 24, 12]


def test_stack_rejects_source_smaller_than_patch():
    with pytest.raises(PatchTooLargeError):
        build_scale_stack(RasterImage(np.zeros((4, 40))), RasterImage(np.zeros((4, 40, 3))), 3, 2.0, 5)


def test_stack_size_mismatch():
    with pytest.raises(SizeMismatchError):
        build_scale_stack(RasterImage(np.zeros((10, 10))), RasterImage(np.zeros((10, 12, 3))), 2, 2.0, 3)


def test_best_match_on_periodic_texture_is_exact():
    text, style = _pair(samples.tiled_texture(48, 16, seed=3))
    stack = build_scale_stack(text, style, levels=1, factor=2.0, patch_size=5)
    q_hat, d = best_match_at_scale(stack, 1, PatchCoord(x=24, y=20))
    assert d == 0.0
    assert (q_hat.x - 24) % 16 == 0 and (q_hat.y - 20) % 16 == 0
    assert max(abs(q_hat.x - 24), abs(q_hat.y - 20)) >= 5


def test_best_match_on_constant_pair_is_zero():
    stack = build_scale_stack(RasterImage(np.zeros((20, 20))), RasterImage(np.full((20, 20, 3), 0.4)), 1, 2.0, 3)
    _, d = best_match_at_scale(stack, 1, PatchCoord(x=10, y=10))
    assert d == 0.0


def test_self_match_exhaustive_matches_brute_force(rng):
    style = RasterImage(rng.random((24, 24, 3)))
    text = RasterImage(rng.random((24, 24)))
    qy = np.array([2, 11, 21, 7])
    qx = np.array([2, 13, 4, 20])
    _, _, d = self_match(text, style, 5, method="exhaustive", queries=(qy, qx))
    for i in range(4):
        assert d[i] == pytest.approx(_brute_match(text, style, qy[i], qx[i], 5), abs=1e-12)


def test_self_match_flags_missing_candidates():
    style = RasterImage(np.zeros((7, 7, 3)))
    _, _, d = self_match(RasterImage(np.zeros((7, 7))), style, 5, method="exhaustive")
    assert np.all(np.isinf(d))


def test_self_match_patchmatch_close_to_exhaustive():
    text, style = _pair(samples.tiled_texture(72, 12, seed=5))
    _, _, exact = self_match(text, style, 5, method="exhaustive")
    _, _, approx = self_match(text, style, 5, method="patchmatch", rng=np.random.default_rng(0))
    assert np.all(approx >= exact - 1e-12)
    assert np.mean(approx <= exact + 1e-9) > 0.9


def test_constant_style_retires_at_coarsest_scale():
    params = SynthesisParams()
    text = RasterImage(np.zeros((192, 192)))
    style = RasterImage(np.full((192, 192, 3), 0.5))
    stack = build_scale_stack(text, style, params.scales, params.scale_factor, params.patch_size)
    sm = detect_optimal_scales(stack, params.omega)
    assert np.all(sm.scal == params.scales)


def test_unmatched_pixels_retire_at_requested_scale():
    # The 5x5 fourth level has a single centre and no admissible candidate.
    stack = build_scale_stack(RasterImage(np.zeros((40, 40))), RasterImage(np.full((40, 40, 3), 0.5)), 5, 2.0, 5)
    assert stack.levels == 4
    sm = detect_optimal_scales(stack, 0.3)
    assert np.all(sm.scal == 5)


def test_binary_noise_keeps_finest_scale():
    rng = np.random.default_rng(11)
    coarse = rng.integers(0, 2, size=(48, 48)).astype(np.float64)
    noise = np.kron(coarse, np.ones((2, 2)))
    style = RasterImage(np.repeat(noise[..., None], 3, axis=2))
    stack = build_scale_stack(RasterImage(noise), style, levels=2, factor=2.0, patch_size=7)
    assert stack.levels == 2
    sm = detect_optimal_scales(stack, 0.3)
    assert np.all(sm.scal == 1)


def test_flat_left_textured_right():
    rng = np.random.default_rng(2)
    style = np.full((32, 32, 3), 0.5)
    style[:, 16:] = rng.random((32, 16, 3))
    text = np.zeros((32, 32))
    text[8:24, 12:20] = 1.0
    stack = build_scale_stack(RasterImage(text), RasterImage(style), 4, 1.5, 3)
    sm = detect_optimal_scales(stack, 0.3)
    np.testing.assert_array_equal(sm.scal, _literal_scale_detection(stack, 0.3))
    assert np.all(sm.scal[:, :4] == stack.requested_levels)
    assert np.all(sm.scal[:, 28:] < stack.requested_levels)


@pytest.mark.parametrize("seed", range(10))
def test_detection_matches_literal_transcription(seed):
    text, style = _mixed_pair(seed)
    stack = build_scale_stack(text, style, levels=4, factor=1.5, patch_size=3)
    assert stack.levels == 4
    sm = detect_optimal_scales(stack, 0.3)
    np.testing.assert_array_equal(sm.scal, _literal_scale_detection(stack, 0.3))


def test_raising_omega_never_lowers_scale():
    text, style = _mixed_pair(42)
    stack = build_scale_stack(text, style, levels=4, factor=1.5, patch_size=3)
    low = detect_optimal_scales(stack, 0.2).scal
    high = detect_optimal_scales(stack, 0.4).scal
    assert np.all(high >= low)


def test_histogram_concentration_and_total():
    field = analyze_text(samples.mask_to_text(samples.glyph_mask("O", 10))).field
    sm = ScaleMap(scal=np.ones((10, 10), dtype=np.int64), levels=3)
    hist = scale_distance_histogram(sm, field)
    assert hist.shape == (3, BIN_COUNT)
    assert hist.sum() == 100
    assert hist[1:].sum() == 0


def test_histogram_checkerboard():
    field = analyze_text(samples.mask_to_text(samples.glyph_mask("O", 10))).field
    checker = (np.indices((10, 10)).sum(axis=0) % 2).astype(np.int64)
    sm = ScaleMap(scal=checker + 1, levels=2)
    bins = np.where(checker == 1, 7, 3)
    hist = scale_distance_histogram(sm, field.__class__(field.dist, field.regression, field.bin_edges, bins))
    assert hist[0, 3] == 50 and hist[1, 7] == 50
    assert hist.sum() == 100


def test_histogram_domain_mismatch():
    field = analyze_text(samples.mask_to_text(samples.glyph_mask("O", 40))).field
    with pytest.raises(SizeMismatchError):
        scale_distance_histogram(ScaleMap(scal=np.ones((5, 5), dtype=np.int64), levels=2), field)


def test_posterior_uniform():
    post = estimate_posterior(np.ones((5, BIN_COUNT)))
    np.testing.assert_allclose(post.posterior, 0.2)
    assert post.joint.sum() == pytest.approx(1.0)


def test_posterior_single_cell_fills_every_column():
    hist = np.zeros((4, BIN_COUNT))
    hist[2, 40] = 7
    post = estimate_posterior(hist)
    np.testing.assert_array_equal(post.posterior[2], 1.0)
    assert post.posterior[[0, 1, 3]].sum() == 0


def test_posterior_tie_takes_lower_column():
    hist = np.zeros((2, BIN_COUNT))
    hist[0, 10] = 1
    hist[1, 14] = 1
    post = estimate_posterior(hist)
    assert post.posterior[0, 12] == 1.0
    assert post.posterior[1, 13] == 1.0


def test_posterior_columns_sum_to_one(rng):
    for _ in range(100):
        hist = rng.integers(0, 5, size=(5, BIN_COUNT)) * (rng.random((1, BIN_COUNT)) < 0.4)
        if hist.sum() == 0:
            hist[0, 0] = 1
        post = estimate_posterior(hist)
        np.testing.assert_allclose(post.posterior.sum(axis=0), 1.0, atol=1e-9)
        supported = hist.sum(axis=0) > 0
        np.testing.assert_allclose(
            post.posterior[:, supported], hist[:, supported] / hist[:, supported].sum(axis=0), atol=1e-12
        )


def test_posterior_empty_histogram():
    with pytest.raises(EmptyHistogramError):
        estimate_posterior(np.zeros((3, BIN_COUNT)))


def test_source_statistics_bundle(small_neon_pair):
    text, style = small_neon_pair
    params = SynthesisParams(scales=3)
    geometry = analyze_text(text)
    stats = source_statistics(text, style, geometry, params)
    assert stats.histogram.shape == (3, BIN_COUNT)
    assert stats.histogram.sum() == text.height * text.width
    assert stats.scale_map.scal.min() >= 1 and stats.scale_map.scal.max() <= params.scales
    np.testing.assert_allclose(stats.posterior.posterior.sum(axis=0), 1.0, atol=1e-9)
