import math

import numpy as np
import pytest

from robench.distortions import (
    DEFAULT_BV_OFFSETS,
    DEFAULT_QP_LEVELS,
    DEFAULT_RES_SCALES,
    DEFAULT_WN_SIGMAS,
    DistortionSpec,
    LadderConfig,
    add_gaussian_noise,
    adjust_brightness,
    downscale,
)
from robench.frames import Image, mean_luma, psnr

from conftest import constant_image, random_image


# --- white noise ---------------------------------------------------------


def test_noise_vanishing_sigma_is_identity(rng):
    img = random_image(rng, 12, 12)
    out = add_gaussian_noise(img, 1e-9, seed=4)
    assert np.array_equal(out.samples, img.samples)


def test_noise_matches_sigma_analytics():
    img = constant_image(128, 256, 256)
    out = add_gaussian_noise(img, 0.02, seed=7)
    assert abs(psnr(img, out) - (-20 * math.log10(0.02))) < 0.5


def test_noise_deterministic_per_seed():
    img = constant_image(100, 32, 32)
    a = add_gaussian_noise(img, 0.1, seed=42)
    b = add_gaussian_noise(img, 0.1, seed=42)
    c = add_gaussian_noise(img, 0.1, seed=43)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_noise_sigma_range():
    img = constant_image(0, 4, 4)
    for sigma in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            add_gaussian_noise(img, sigma, seed=1)


# --- brightness ----------------------------------------------------------


def test_brightness_zero_offset_is_identity(rng):
    img = random_image(rng, 10, 10, channels=3)
    assert np.array_equal(adjust_brightness(img, 0.0).samples, img.samples)


def test_brightness_plus_tenth():
    # raw 127 -> 127 + 0.1*255 = 152.5 -> rounds half away from zero to 153
    out = adjust_brightness(constant_image(127, 4, 4), 0.1)
    assert np.all(out.samples == 153)


def test_brightness_saturates():
    out = adjust_brightness(constant_image(230, 4, 4), 0.3)
    assert np.all(out.samples == 255)
    out = adjust_brightness(constant_image(20, 4, 4), -0.3)
    assert np.all(out.samples == 0)


def test_brightness_applies_to_every_channel():
    img = constant_image(100, 2, 2, channels=3)
    out = adjust_brightness(img, 0.2)
    assert np.all(out.samples == 151)  # 100 + 51


def test_brightness_offset_range():
    with pytest.raises(ValueError):
        adjust_brightness(constant_image(1), 1.2)


# --- downscale -----------------------------------------------------------


def _naive_box_downscale(samples, scale):
    """Unrounded per-pixel footprint averages, straight from the definition."""
    h, w, c = samples.shape
    out_h = int(math.floor(h * scale + 0.5))
    out_w = int(math.floor(w * scale + 0.5))
    out = np.zeros((out_h, out_w, c))
    for j in range(out_h):
        lo_y, hi_y = j * h / out_h, (j + 1) * h / out_h
        for i in range(out_w):
            lo_x, hi_x = i * w / out_w, (i + 1) * w / out_w
            total = np.zeros(c)
            weight = 0.0
            for y in range(int(lo_y), min(int(math.ceil(hi_y)), h)):
                wy = min(hi_y, y + 1) - max(lo_y, y)
                for x in range(int(lo_x), min(int(math.ceil(hi_x)), w)):
                    wx = min(hi_x, x + 1) - max(lo_x, x)
                    if wy > 0 and wx > 0:
                        total += samples[y, x] * wy * wx
                        weight += wy * wx
            out[j, i] = total / weight
    return out


def test_downscale_identity():
    img = constant_image(33, 6, 6)
    assert downscale(img, 1.0) is img


def test_downscale_2x2_average():
    arr = np.array([[0, 64], [128, 192]], dtype=np.uint8)[:, :, None]
    out = downscale(Image(arr), 0.5)
    assert out.samples.shape == (1, 1, 1)
    assert out.samples[0, 0, 0] == 96


def test_downscale_reaches_24x18():
    img = constant_image(50, 576, 768)
    out = downscale(img, 1 / 32)
    assert (out.width, out.height) == (24, 18)


def test_downscale_preserves_constant_mean_exactly(rng):
    for scale in (0.75, 0.5, 1 / 3, 0.1):
        value = int(rng.integers(0, 256))
        out = downscale(constant_image(value, 30, 40), scale)
        assert mean_luma(out) == float(value)


def test_downscale_matches_naive_oracle(rng):
    # Exact agreement except where the true average sits on a .5 rounding
    # boundary, where the two float summation orders may tie-break apart.
    for _ in range(12):
        h = int(rng.integers(3, 12))
        w = int(rng.integers(3, 12))
        scale = float(rng.uniform(0.2, 0.95))
        if int(math.floor(h * scale + 0.5)) < 1 or int(math.floor(w * scale + 0.5)) < 1:
            continue
        img = random_image(rng, h, w)
        exact_avg = _naive_box_downscale(img.samples.astype(np.float64), scale)
        expected = np.floor(exact_avg + 0.5).astype(np.uint8)
        got = downscale(img, scale).samples
        frac = np.abs(exact_avg - np.floor(exact_avg) - 0.5)
        on_boundary = frac < 1e-9
        assert np.array_equal(got[~on_boundary], expected[~on_boundary])
        assert np.abs(got.astype(int) - expected.astype(int)).max() <= 1


def test_downscale_zero_dimension():
    with pytest.raises(ValueError):
        downscale(constant_image(0, 4, 4), 0.05)
    with pytest.raises(ValueError):
        downscale(constant_image(0, 4, 4), 1.5)


# --- specs and grids -----------------------------------------------------


def test_default_grid_sizes():
    assert len(DEFAULT_QP_LEVELS) == 11
    assert len(DEFAULT_RES_SCALES) == 11
    assert len(DEFAULT_WN_SIGMAS) == 20
    assert len(DEFAULT_BV_OFFSETS) == 10
    assert LadderConfig().total_levels() == 52


def test_default_grid_shapes():
    assert DEFAULT_QP_LEVELS[0] == 10 and DEFAULT_QP_LEVELS[-1] == 65
    assert all(a < b for a, b in zip(DEFAULT_QP_LEVELS, DEFAULT_QP_LEVELS[1:]))
    assert all(a > b for a, b in zip(DEFAULT_RES_SCALES, DEFAULT_RES_SCALES[1:]))
    assert DEFAULT_RES_SCALES[-1] == 1 / 32
    assert abs(DEFAULT_WN_SIGMAS[0] - 0.005) < 1e-15
    assert abs(DEFAULT_WN_SIGMAS[-1] - 0.5) < 1e-15
    assert all(a < b for a, b in zip(DEFAULT_WN_SIGMAS, DEFAULT_WN_SIGMAS[1:]))
    lows = [o for o in DEFAULT_BV_OFFSETS if o < 0]
    highs = [o for o in DEFAULT_BV_OFFSETS if o > 0]
    assert len(lows) == 4 and len(highs) == 6


def test_ladder_config_validation():
    with pytest.raises(ValueError):
        LadderConfig(qp_levels=(20, 10))
    with pytest.raises(ValueError):
        LadderConfig(res_scales=(0.25, 0.5))
    with pytest.raises(ValueError):
        LadderConfig(wn_sigmas=(0.2, 0.1))
    with pytest.raises(ValueError):
        LadderConfig(bv_offsets=(-0.1, 0.0, 0.1))


def test_distortion_spec_validation():
    with pytest.raises(ValueError):
        DistortionSpec(kind="qp", level=1, param=66)
    with pytest.raises(ValueError):
        DistortionSpec(kind="qp", level=1, param=10.5)
    with pytest.raises(ValueError):
        DistortionSpec(kind="res", level=1, param=0.0)
    with pytest.raises(ValueError):
        DistortionSpec(kind="wn", level=1, param=0.1)  # missing seed
    with pytest.raises(ValueError):
        DistortionSpec(kind="bv", level=1, param=0.0)
    with pytest.raises(ValueError):
        DistortionSpec(kind="fog", level=1, param=0.1)
    spec = DistortionSpec(kind="wn", level=2, param=0.25, seed=11)
    assert DistortionSpec.from_json(spec.to_json()) == spec
