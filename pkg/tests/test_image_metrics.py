import numpy as np
import pytest
from skimage.metrics import structural_similarity

from metrics.image_metrics import (PSNR_CAP, SSIM_C1, dssim, l1_with_gradient, masked_psnr,
                                   photometric_loss, psnr, ssim, ssim_with_gradient)
from models.errors import InvalidArgumentError
from models.image_buffer import ImageBuffer


def test_psnr_examples():
    a = np.full((4, 4, 3), 0.3)
    assert psnr(a, a) == PSNR_CAP
    assert psnr(a, a + 0.1) == pytest.approx(20.0)
    assert psnr(np.zeros((8, 8, 3)), np.full((8, 8, 3), 0.5)) == pytest.approx(6.0206, abs=1e-4)
    assert psnr(ImageBuffer(a), ImageBuffer(a + 0.1)) == pytest.approx(20.0)


def test_psnr_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))


def test_masked_psnr_ignores_masked_pixels():
    a = np.zeros((4, 4, 3))
    b = a.copy()
    b[0, 0] = 1.0
    keep = np.ones((4, 4), dtype=bool)
    keep[0, 0] = False
    assert masked_psnr(a, b, keep) == PSNR_CAP
    with pytest.raises(InvalidArgumentError):
        masked_psnr(a, b, np.zeros((4, 4), dtype=bool))


def test_ssim_identical_and_constant():
    rng = np.random.default_rng(0)
    a = rng.uniform(size=(16, 16, 3))
    assert ssim(a, a) == pytest.approx(1.0)
    assert dssim(a, a) == pytest.approx(0.0, abs=1e-12)
    value = ssim(np.zeros((11, 11, 1)), np.ones((11, 11, 1)))
    assert value == pytest.approx(SSIM_C1 / (1.0 + SSIM_C1), rel=1e-6)


def test_ssim_requires_window_size():
    with pytest.raises(InvalidArgumentError):
        ssim(np.zeros((10, 20, 3)), np.zeros((10, 20, 3)))


def test_ssim_matches_scikit_image():
    rng = np.random.default_rng(1)
    a = rng.uniform(size=(24, 20, 3))
    b = np.clip(a + rng.normal(0, 0.1, size=a.shape), 0, 1)
    expected = structural_similarity(
        a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
        data_range=1.0, channel_axis=-1,
    )
    assert ssim(a, b) == pytest.approx(expected, abs=1e-6)


def _numeric_gradient(fn, image, flat_indices, step=1e-6):
    result = []
    for i in flat_indices:
        plus, minus = image.copy(), image.copy()
        plus.reshape(-1)[i] += step
        minus.reshape(-1)[i] -= step
        result.append((fn(plus) - fn(minus)) / (2 * step))
    return np.array(result)


def test_ssim_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    a = rng.uniform(size=(14, 13, 2))
    b = rng.uniform(size=(14, 13, 2))
    _, grad_a, grad_b = ssim_with_gradient(a, b)
    picks = rng.choice(a.size, size=25, replace=False)
    assert np.allclose(grad_a.reshape(-1)[picks], _numeric_gradient(lambda x: ssim(x, b), a, picks),
                       rtol=1e-4, atol=1e-8)
    assert np.allclose(grad_b.reshape(-1)[picks], _numeric_gradient(lambda y: ssim(a, y), b, picks),
                       rtol=1e-4, atol=1e-8)


def test_photometric_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    a = rng.uniform(0.0, 0.4, size=(12, 12, 3))
    b = rng.uniform(0.6, 1.0, size=(12, 12, 3))
    loss, grad_a, _ = photometric_loss(a, b, 0.2)
    picks = rng.choice(a.size, size=20, replace=False)
    numeric = _numeric_gradient(lambda x: photometric_loss(x, b, 0.2)[0], a, picks)
    assert np.allclose(grad_a.reshape(-1)[picks], numeric, rtol=1e-4, atol=1e-8)
    assert loss > 0


def test_l1():
    a = np.array([[0.0, 0.5], [1.0, 0.25]])
    b = np.array([[0.5, 0.5], [0.0, 0.5]])
    value, grad_a, grad_b = l1_with_gradient(a, b)
    assert value == pytest.approx((0.5 + 0.0 + 1.0 + 0.25) / 4)
    assert np.allclose(grad_a, [[-0.25, 0.0], [0.25, -0.25]])
    assert np.allclose(grad_b, -grad_a)


def test_photometric_rejects_bad_lambda():
    with pytest.raises(InvalidArgumentError):
        photometric_loss(np.zeros((2, 2)), np.zeros((2, 2)), 1.5)
