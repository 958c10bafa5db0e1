import numpy as np
import pytest

from veinforge.dla import DlaConfig, run_dla
from veinforge.network import VeinNetwork
from veinforge.raster import (
    EnhanceConfig,
    blend,
    box_blur,
    enhance,
    gen_texture,
    load_image,
    rasterize,
    save_image,
    to_uint8,
)


def horizontal_line(radius=2.0):
    return VeinNetwork(nodes=[[0.25, 0.5], [0.75, 0.5]], edges=[[0, 1]], radii=[radius])


def test_stroke_profile():
    # radii are in pixels at the 128 px reference size
    img = rasterize(horizontal_line(1.7), 128, 128, depth=0.6)
    # y = 0.5 falls on the boundary between rows 63 and 64
    assert img[63, 64] == pytest.approx(0.4)
    assert img[64, 64] == pytest.approx(0.4)
    # centres 1.5 px away get partial coverage 2.2 - 1.5
    assert img[62, 64] == pytest.approx(1 - 0.6 * 0.7)
    assert img[61, 64] == 1.0
    assert img[63, 10] == 1.0
    assert img.min() >= 0.4 and img.max() <= 1.0
    half = rasterize(horizontal_line(1.7), 64, 64, depth=0.6)
    assert half[31, 32] == pytest.approx(1 - 0.6 * 0.85)


def test_y_axis_points_up():
    net = VeinNetwork(nodes=[[0.1, 0.9], [0.9, 0.9]], edges=[[0, 1]], radii=[1.0])
    img = rasterize(net, 32, 32)
    assert img[:8].min() < 1.0 and img[24:].min() == 1.0


def test_stroke_scale_widens():
    thin = rasterize(horizontal_line(1.0), 64, 64)
    thick = rasterize(horizontal_line(1.0), 64, 64, stroke_scale=3.0)
    assert (thick < 1).sum() > 2 * (thin < 1).sum()


def test_network_rejects_placement():
    with pytest.raises(TypeError):
        rasterize(horizontal_line(), 32, 32, angle=0.3)


def test_aggregate_placement_moves_pattern():
    agg = run_dla(DlaConfig(particle_count=300, lattice_size=101, rng_seed=0))
    centred = rasterize(agg, 64, 64)
    assert centred[32, 32] < 1.0  # seed sits at the centre
    moved = rasterize(agg, 64, 64, offset=(0.25, 0.25))
    assert moved[48, 48] < 1.0
    assert not np.array_equal(centred, moved)
    with pytest.raises(ValueError):
        rasterize(agg, 64, 64, zoom=0)


def test_box_blur_matches_brute_force(rng):
    img = rng.random((20, 23))
    r = 2
    padded = np.pad(img, r, mode="symmetric")
    ref = np.zeros_like(img)
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            ref[y, x] = padded[y:y + 2 * r + 1, x:x + 2 * r + 1].mean()
    np.testing.assert_allclose(box_blur(img, r), ref, atol=1e-12)


@pytest.mark.parametrize("radius", [3, 4, 5])
def test_three_box_passes_have_expected_spread(radius):
    impulse = np.zeros((101, 101))
    impulse[50, 50] = 1.0
    out = box_blur(impulse, radius, 3)
    y = np.arange(101) - 50
    var = float((out.sum(axis=1) * y**2).sum())
    # one pass of width w = 2r+1 has variance (w^2 - 1)/12
    assert var == pytest.approx(3 * ((2 * radius + 1) ** 2 - 1) / 12, rel=1e-9)
    assert out.sum() == pytest.approx(1.0)


def test_enhance_clamps_then_blurs():
    img = np.full((16, 16), 0.8)
    out = enhance(img, EnhanceConfig(brightness_factor=1.5, blur_radius=3))
    np.testing.assert_allclose(out, 1.0)


def test_enhance_draw_ranges():
    for s in range(40):
        cfg = EnhanceConfig.draw(s)
        assert 1.2 <= cfg.brightness_factor <= 1.8
        assert 3 <= cfg.blur_radius <= 5
    with pytest.raises(ValueError):
        EnhanceConfig(brightness_factor=2.0)


def test_texture_properties():
    a = gen_texture(96, 80, rng_seed=3)
    assert a.shape == (80, 96)
    assert 0.55 <= a.mean() <= 0.8
    assert a.std() > 0
    np.testing.assert_array_equal(a, gen_texture(96, 80, rng_seed=3))
    assert not np.array_equal(a, gen_texture(96, 80, rng_seed=4))


def test_blend_is_multiplicative():
    v = np.array([[1.0, 0.5]])
    t = np.array([[0.6, 0.6]])
    np.testing.assert_allclose(blend(v, t), [[0.6, 0.3]])
    with pytest.raises(ValueError):
        blend(v, np.ones((2, 2)))


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_image_round_trip(tmp_path, rng, suffix):
    img = rng.random((17, 9))
    path = tmp_path / f"x{suffix}"
    save_image(img, path)
    back = load_image(path)
    assert back.shape == img.shape
    assert np.max(np.abs(back - img)) <= 0.5 / 255 + 1e-12


def test_empty_network_is_white():
    empty = VeinNetwork(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0))
    np.testing.assert_array_equal(rasterize(empty, 20, 30), np.ones((30, 20)))


def test_band_darker_and_deterministic():
    img = rasterize(VeinNetwork([[0, 0.5], [1, 0.5]], [[0, 1]], [2.0]), 64, 64)
    np.testing.assert_array_equal(img, rasterize(VeinNetwork([[0, 0.5], [1, 0.5]], [[0, 1]], [2.0]), 64, 64))
    assert img[30:34].mean() < np.delete(img, range(30, 34), axis=0).mean()


def test_enhance_constant_and_clamp():
    out = enhance(np.full((12, 12), 0.5), EnhanceConfig(brightness_factor=1.5, blur_radius=4))
    np.testing.assert_allclose(out, 0.75)
    px = np.full((12, 12), 0.9)
    np.testing.assert_allclose(enhance(px, EnhanceConfig(brightness_factor=1.8, blur_radius=3)), 1.0)


def total_variation(img):
    return np.abs(np.diff(img, axis=0)).sum() + np.abs(np.diff(img, axis=1)).sum()


def test_blur_does_not_increase_total_variation(rng):
    img = rng.random((40, 40))
    out = box_blur(img, 3, 3)
    assert total_variation(out) <= total_variation(img)
    assert out.max() <= img.max() and out.min() >= img.min()


def test_texture_seeds_differ_pixelwise():
    for s in range(5):
        a, b = to_uint8(gen_texture(rng_seed=s)), to_uint8(gen_texture(rng_seed=s + 100))
        assert np.mean(a != b) >= 0.5


def test_blend_identities_and_vein_contrast(rng):
    tex = gen_texture(64, 64, 1)
    np.testing.assert_array_equal(blend(np.ones((64, 64)), tex), tex)
    veins = rasterize(horizontal_line(2.0), 64, 64)
    np.testing.assert_array_equal(blend(veins, np.ones((64, 64))), veins)
    out = blend(veins, tex)
    mask = veins < 1.0
    assert out[mask].mean() < out[~mask].mean()
