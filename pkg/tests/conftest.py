import numpy as np
import pytest

from texfx import samples
from texfx.config import SynthesisParams
from texfx.imagecore import save_image
from texfx.synthesis import build_context, prepare_source


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def neon_pair():
    return samples.neon_ring_pair(size=192, seed=0)


@pytest.fixture(scope="session")
def small_neon_pair():
    return samples.neon_ring_pair(size=48, seed=0)


@pytest.fixture
def small_params():
    """Two-level pyramid, two joint scales: fast enough for unit tests."""
    return SynthesisParams(pyramid_depth=2, coarsest=32, iterations=3, scales=2)


@pytest.fixture
def self_context(small_neon_pair, small_params):
    """Context with T = S whose target style estimates are the source style at every level."""
    text, style = small_neon_pair
    source = prepare_source(text, style, small_params)
    ctx = build_context(source, text, small_params, seed=7)
    for level in range(ctx.depth):
        ctx.set_target_style(level, ctx.src_style[level])
    return ctx


@pytest.fixture
def exemplar_files(tmp_path, small_neon_pair):
    """Small exemplar pair and three target glyphs written as PNGs."""
    text, style = small_neon_pair
    save_image(text, tmp_path / "s.png")
    save_image(style, tmp_path / "ss.png")
    targets = tmp_path / "targets"
    targets.mkdir()
    for name in ("T", "L", "H"):
        save_image(samples.mask_to_text(samples.glyph_mask(name, 48)), targets / f"{name}.png")
    return tmp_path
