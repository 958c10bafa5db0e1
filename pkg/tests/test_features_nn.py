import numpy as np
import pytest
from skimage.feature import graycomatrix

from veinforge.metrics.features import (
    brightness_uniformity,
    extract_features,
    feature_matrix,
    glcm,
    glcm_features,
    quantize,
)
from veinforge.metrics.nn import nn_loo_accuracy, nn_loo_accuracy_features
from veinforge.vig import generate_vein_image


@pytest.mark.parametrize("offset", [(0, 1), (1, 0), (1, 1), (1, -1), (0, 3)])
def test_glcm_matches_skimage(rng, offset):
    img = rng.random((30, 27))
    q = quantize(img, 8).astype(np.uint8)
    # skimage pairs (r, c) with (r + round(d sin a), c + round(d cos a))
    angle = np.arctan2(offset[0], offset[1])
    ref = graycomatrix(q, [max(abs(offset[0]), abs(offset[1]))], [angle], levels=8,
                       symmetric=True, normed=True)[:, :, 0, 0]
    np.testing.assert_allclose(glcm(img, offset), ref, atol=1e-12)


def test_checkerboard_texture():
    board = (np.indices((16, 16)).sum(0) % 2).astype(float)
    f = glcm_features(board, (0, 1), levels=2)
    assert f.contrast == pytest.approx(1.0)
    assert f.correlation == pytest.approx(-1.0)
    assert f.homogeneity == pytest.approx(0.5)
    flat = glcm_features(np.full((8, 8), 0.3))
    assert flat.contrast == 0 and flat.energy == pytest.approx(1.0) and flat.correlation == 0


def test_brightness_uniformity():
    assert brightness_uniformity(np.full((10, 13), 0.4)) == pytest.approx(1.0)
    ramp = np.tile(np.linspace(0, 1, 64), (64, 1))
    assert brightness_uniformity(ramp) < 0.3


def test_feature_vector_layout(rng):
    img = rng.random((96, 96))
    f = extract_features(img)
    assert f.shape == (100,)
    assert np.all(np.isfinite(f))
    assert f[84:].sum() == pytest.approx(1.0)
    const = extract_features(np.full((128, 128), 0.25))
    np.testing.assert_allclose(const[:64], 0.25)
    assert feature_matrix([img, img]).shape == (2, 100)


def test_nn_duplicates_score_zero(rng):
    x = rng.random((10, 4))
    assert nn_loo_accuracy_features(x, x.copy()) == 0.0


def test_nn_separated_sets_score_one(rng):
    a = rng.normal(size=(15, 3))
    assert nn_loo_accuracy_features(a, a + 100) == 1.0


def test_nn_brute_force(rng):
    a, b = rng.random((8, 2)), rng.random((9, 2))
    x = np.vstack([a, b])
    lab = [0] * 8 + [1] * 9
    hits = 0
    for i in range(17):
        d = [np.linalg.norm(x[i] - x[j]) if j != i else np.inf for j in range(17)]
        hits += lab[int(np.argmin(d))] == lab[i]
    assert nn_loo_accuracy_features(a, b) == pytest.approx(hits / 17)


def test_nn_on_images(rng):
    imgs = [rng.random((32, 32)) for _ in range(4)]
    assert nn_loo_accuracy(imgs, imgs) == 0.0
    with pytest.raises(ValueError):
        nn_loo_accuracy([], imgs)


def test_constant_image_features():
    f = extract_features(np.full((50, 70), 0.6))
    np.testing.assert_allclose(f[:64], 0.6)
    assert f[84] == 1.0 and f[85:].sum() == 0.0


def test_two_by_two_checkerboard_vertical_offset():
    board = np.array([[0.0, 1.0], [1.0, 0.0]])
    p = glcm(board, (1, 0), levels=2)
    np.testing.assert_allclose(p, p.T)
    assert glcm_features(board, (1, 0), levels=2).contrast == 1.0


def test_uniformity_extremes_and_shift():
    half = np.zeros((32, 32))
    half[:, 16:] = 1.0
    assert brightness_uniformity(half) == 0.0
    img = np.random.default_rng(3).uniform(0.2, 0.6, (40, 40))
    assert brightness_uniformity(img + 0.3) == pytest.approx(brightness_uniformity(img), abs=1e-12)


def test_features_stable_under_one_pixel_shift():
    for s in range(5):
        img = generate_vein_image("colonization", s)[0]
        moved = np.roll(img, 1, axis=1)
        a, b = extract_features(img), extract_features(moved)
        assert abs(np.linalg.norm(b) - np.linalg.norm(a)) < 0.1 * np.linalg.norm(a)


def test_far_clusters_are_separable():
    rng = np.random.default_rng(8)
    accs = [nn_loo_accuracy_features(rng.normal(size=(30, 5)), rng.normal(size=(30, 5)) + 6)
            for _ in range(20)]
    assert min(accs) >= 0.95
