import numpy as np
import pytest
from PIL import Image

from texfx.errors import (
    ChannelMismatchError,
    DegenerateInputError,
    ImageDecodeError,
    ImageNotFoundError,
    PatchTooLargeError,
    UnsupportedBitDepthError,
)
from texfx.imagecore import (
    PatchCoord,
    RasterImage,
    build_pyramid,
    clamp_center,
    downsample,
    load_image,
    patch_ssd,
    psnr,
    resample_array,
    round_half_up,
    save_image,
    to_luma,
)


def test_raster_image_expands_gray_and_is_read_only():
    img = RasterImage(np.zeros((3, 4)))
    assert img.shape == (3, 4, 1)
    assert (img.height, img.width, img.channels) == (3, 4, 1)
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 1.0


def test_raster_image_rejects_out_of_range_values():
    with pytest.raises(DegenerateInputError):
        RasterImage(np.full((2, 2), 1.5))


def test_raster_image_rejects_two_channels():
    with pytest.raises(ChannelMismatchError):
        RasterImage(np.zeros((2, 2, 2)))


def test_load_gray_png_scales_bytes(tmp_path):
    path = tmp_path / "g.png"
    Image.fromarray(np.array([[0, 255], [128, 64]], dtype=np.uint8)).save(path)
    img = load_image(path)
    assert img.channels == 1
    np.testing.assert_array_equal(img.data[:, :, 0], [[0.0, 1.0], [128 / 255, 64 / 255]])


def test_save_then_load_is_identity(tmp_path, rng):
    pixels = rng.integers(0, 256, size=(7, 5, 3)).astype(np.float64) / 255.0
    img = RasterImage(pixels)
    save_image(img, tmp_path / "rgb.png")
    np.testing.assert_array_equal(load_image(tmp_path / "rgb.png").data, img.data)


def test_load_missing_file(tmp_path):
    with pytest.raises(ImageNotFoundError) as exc:
        load_image(tmp_path / "nope.png")
    assert isinstance(exc.value, FileNotFoundError)
    assert exc.value.exit_code == 2
    assert "nope.png" in exc.value.format_message()


def test_load_garbage_file(tmp_path):
    path = tmp_path / "bad.png"
    path.write_bytes(b"not an image at all")
    with pytest.raises(ImageDecodeError):
        load_image(path)


def test_load_rejects_non_png(tmp_path):
    path = tmp_path / "img.png"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(path, format="JPEG")
    with pytest.raises(ImageDecodeError):
        load_image(path)


def test_load_rejects_sixteen_bit(tmp_path):
    path = tmp_path / "wide.png"
    Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16)).save(path)
    with pytest.raises(UnsupportedBitDepthError):
        load_image(path)


def test_to_luma_is_channel_mean():
    img = RasterImage(np.array([[[0.0, 0.3, 0.6]]]))
    assert to_luma(img).data[0, 0, 0] == pytest.approx(0.3)


def test_downsample_constant_stays_constant():
    img = RasterImage(np.full((13, 9, 3), 0.37))
    small = downsample(img, 2.5)
    assert small.shape == (round_half_up(13 / 2.5), round_half_up(9 / 2.5), 3)
    np.testing.assert_allclose(small.data, 0.37, atol=1e-12)


def test_downsample_by_two_averages_blocks(rng):
    data = rng.random((4, 4))
    small = downsample(RasterImage(data), 2)
    expected = data.reshape(2, 2, 2, 2).mean(axis=(1, 3))
    np.testing.assert_allclose(small.data[:, :, 0], expected, atol=1e-12)


def test_downsample_matches_supersampled_area_average(rng):
    # 5 -> 3: split each input pixel into 3x3 cells, then every output pixel owns 5x5 cells.
    data = rng.random((5, 5))
    fine = np.repeat(np.repeat(data, 3, axis=0), 3, axis=1)
    expected = fine.reshape(3, 5, 3, 5).mean(axis=(1, 3))
    small = downsample(RasterImage(data), 2)
    assert small.shape == (3, 3, 1)
    np.testing.assert_allclose(small.data[:, :, 0], expected, atol=1e-6)


def test_downsample_rejects_factor_one():
    with pytest.raises(ValueError):
        downsample(RasterImage(np.zeros((4, 4))), 1.0)


def test_resample_array_keeps_values_outside_unit_range():
    arr = np.full((6, 6), 3.5)
    np.testing.assert_allclose(resample_array(arr, 4, 4), 3.5)


def test_pyramid_depth_one_is_input():
    img = RasterImage(np.zeros((10, 12)))
    pyr = build_pyramid(img, 1, 8)
    assert len(pyr) == 1
    assert pyr.finest is img


def test_pyramid_follows_geometric_progression():
    img = RasterImage(np.zeros((320, 320)))
    pyr = build_pyramid(img, 10, 32)
    sizes = [max(level.height, level.width) for level in pyr.levels]
    assert sizes == [round_half_up(32 * 10 ** (k / 9)) for k in range(10)]
    assert pyr.finest is img
    assert pyr.scale_ratios[-1] == 1.0
    assert all(a < b for a, b in zip(pyr.scale_ratios, pyr.scale_ratios[1:]))


def test_pyramid_depth_capped_when_sizes_would_repeat():
    img = RasterImage(np.zeros((40, 40)))
    pyr = build_pyramid(img, 10, 32)
    sizes = [level.width for level in pyr.levels]
    assert len(pyr) < 10
    assert sizes[0] == 32 and sizes[-1] == 40
    assert all(a < b for a, b in zip(sizes, sizes[1:]))


def test_pyramid_rejects_coarsest_larger_than_image():
    with pytest.raises(DegenerateInputError):
        build_pyramid(RasterImage(np.zeros((16, 16))), 3, 32)


def test_patch_coord_at_scale_rounds_to_nearest():
    assert PatchCoord(x=9, y=4).at_scale(2.0, 2) == PatchCoord(5, 2, 2)
    assert PatchCoord(x=12, y=12).at_scale(2.0, 3) == PatchCoord(3, 3, 3)


def test_clamp_center_and_patch_too_large():
    assert clamp_center(0, 9, 10, 10, 5) == (2, 7)
    with pytest.raises(PatchTooLargeError):
        clamp_center(1, 1, 3, 3, 5)


def test_patch_ssd_identity_and_extremes():
    zeros = RasterImage(np.zeros((8, 8, 3)))
    ones = RasterImage(np.ones((8, 8, 3)))
    p = PatchCoord(4, 4)
    assert patch_ssd(zeros, p, zeros, p, 5) == 0.0
    assert patch_ssd(zeros, p, ones, p, 5) == pytest.approx(1.0)


def test_patch_ssd_matches_loop_and_is_symmetric(rng):
    a = RasterImage(rng.random((9, 9, 3)))
    b = RasterImage(rng.random((9, 9, 3)))
    pa, pb = PatchCoord(x=3, y=5), PatchCoord(x=6, y=2)
    total = 0.0
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            for c in range(3):
                total += (a.data[5 + dy, 3 + dx, c] - b.data[2 + dy, 6 + dx, c]) ** 2
    assert patch_ssd(a, pa, b, pb, 5) == pytest.approx(total / 75, abs=1e-9)
    assert patch_ssd(a, pa, b, pb, 5) == pytest.approx(patch_ssd(b, pb, a, pa, 5), abs=1e-15)


def test_patch_ssd_channel_mismatch():
    with pytest.raises(ChannelMismatchError):
        patch_ssd(RasterImage(np.zeros((5, 5))), PatchCoord(2, 2), RasterImage(np.zeros((5, 5, 3))), PatchCoord(2, 2), 5)


def test_psnr():
    a = RasterImage(np.zeros((4, 4)))
    b = RasterImage(np.full((4, 4), 0.1))
    assert psnr(a, b) == pytest.approx(20.0)
    assert psnr(a, a) == float("inf")
