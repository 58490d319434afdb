import numpy as np
import pytest

from binseg import egs, errors
from oracles import naive_conv2d, reference_egs


def test_sigma_zero_is_identity():
    rng = np.random.default_rng(0)
    img = rng.standard_normal((6, 7, 3)).astype(np.float32)
    out = egs.gaussian_smooth(img, 0.0)
    np.testing.assert_array_equal(out, img)


def test_constant_image_unchanged():
    img = np.full((9, 9, 3), 42.0, np.float32)
    for sigma in (0.5, 1.0, 2.5):
        out = egs.gaussian_smooth(img, sigma)
        assert np.abs(out - 42.0).max() < 1e-5


def test_impulse_matches_dense_convolution():
    img = np.zeros((9, 9, 1), np.float32)
    img[4, 4] = 1.0
    sigma = 1.0
    out = egs.gaussian_smooth(img, sigma)
    radius = 3
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k1 = np.exp(-(x * x) / (2 * sigma * sigma))
    k1 /= k1.sum()
    kernel2d = np.outer(k1, k1)
    expect = naive_conv2d(img, kernel2d)
    assert np.allclose(out, expect, rtol=1e-6, atol=1e-12)
    assert abs(out[4, 4, 0] - kernel2d[radius, radius]) < 1e-7


def test_constant_image_single_segment():
    img = np.full((12, 10, 3), 77, np.uint8)
    labels = egs.egs_segment(img, egs.EgsParams(sigma=0.8, k=100, min_size=1))
    assert labels.max() == 0


def test_two_tone_split():
    img = np.zeros((20, 20, 3), np.uint8)
    img[:, 10:] = 200
    labels = egs.egs_segment(img, egs.EgsParams(sigma=0.0, k=10, min_size=1))
    assert labels.max() == 1
    assert (labels[:, :10] == labels[0, 0]).all()
    assert (labels[:, 10:] == labels[0, 10]).all()
    # boundary contrast: sqrt(3 * 200^2) = 346.41, far above Int + k/|C|
    assert np.sqrt(3 * 200.0**2) == pytest.approx(346.41, abs=0.01)


def test_matches_reference_implementation():
    rng = np.random.default_rng(42)
    for trial in range(25):
        img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        for k in (1.0, 10.0, 100.0):
            got = egs.egs_segment(img, egs.EgsParams(sigma=0.0, k=k, min_size=1))
            expect = reference_egs(img, k, min_size=1)
            np.testing.assert_array_equal(got, expect)


def test_min_size_enforced():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
    labels = egs.egs_segment(img, egs.EgsParams(sigma=0.0, k=5.0, min_size=20))
    sizes = np.bincount(labels.ravel())
    assert sizes.min() >= 20


def test_k_limits():
    rng = np.random.default_rng(5)
    noise = rng.integers(100, 110, (12, 12, 3)).astype(np.uint8)
    collapsed = egs.egs_segment(noise, egs.EgsParams(sigma=0.0, k=1e9, min_size=1))
    assert collapsed.max() == 0
    # k -> 0: only zero-weight edges merge, so segment count is maximal
    tiny = egs.egs_segment(noise, egs.EgsParams(sigma=0.0, k=1e-12, min_size=1))
    zero_merge = reference_egs(noise, 1e-12, min_size=1)
    np.testing.assert_array_equal(tiny, zero_merge)
    assert tiny.max() >= collapsed.max()


def test_rejects_bad_params_and_images():
    with pytest.raises(ValueError):
        egs.EgsParams(sigma=-1).validate()
    with pytest.raises(ValueError):
        egs.EgsParams(k=0).validate()
    with pytest.raises(errors.WrongChannelCount):
        egs.egs_segment(np.zeros((3, 3, 1), np.uint8))
    with pytest.raises(errors.EmptyImage):
        egs.egs_segment(np.zeros((0, 3, 3), np.uint8))


def test_deterministic():
    rng = np.random.default_rng(10)
    img = rng.integers(0, 256, (20, 24, 3)).astype(np.uint8)
    a = egs.egs_segment(img)
    b = egs.egs_segment(img)
    np.testing.assert_array_equal(a, b)
