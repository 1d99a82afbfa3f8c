import logging
from types import SimpleNamespace

import numpy as np
import pytest

from coregularization.losses import color_coreg_loss, pearson_depth_coreg, total_loss
from metrics.image_metrics import SSIM_C1
from models.errors import InvalidArgumentError
from models.image_buffer import ImageBuffer


def config(lambda_dssim=0.2, lambda_pseudo=1.0, lambda_depth=0.0):
    return SimpleNamespace(lambda_dssim=lambda_dssim, lambda_pseudo=lambda_pseudo, lambda_depth=lambda_depth)


def fake_render(color, depth=None, alpha=None):
    color = np.asarray(color, dtype=np.float64)
    shape = color.shape[:2]
    return SimpleNamespace(
        color=ImageBuffer(color),
        depth=ImageBuffer(np.ones(shape) if depth is None else depth),
        accum_alpha=ImageBuffer(np.ones(shape) if alpha is None else alpha),
    )


def constant_ssim(a, b):
    return (2 * a * b + SSIM_C1) / (a * a + b * b + SSIM_C1)


def test_identical_images_give_zero():
    image = np.random.default_rng(0).uniform(size=(12, 12, 3))
    loss, grad_a, grad_b = color_coreg_loss(image, image, 0.2)
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(grad_a, 0.0) and np.allclose(grad_b, 0.0)


def test_pure_l1_between_constants():
    loss, _, _ = color_coreg_loss(np.full((4, 4, 3), 0.5), np.full((4, 4, 3), 0.7), 0.0)
    assert loss == pytest.approx(0.2)


def test_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        color_coreg_loss(np.zeros((4, 4, 3)), np.zeros((4, 3, 3)), 0.0)


def test_zero_pseudo_weight_reduces_to_independent_losses():
    rng = np.random.default_rng(1)
    gt = rng.uniform(size=(12, 12, 3))
    renders = [rng.uniform(size=(12, 12, 3)) for _ in range(2)]
    pseudo = [fake_render(rng.uniform(size=(12, 12, 3))) for _ in range(2)]
    result = total_loss(renders, gt, pseudo, config(lambda_pseudo=0.0))
    assert result.total == pytest.approx(sum(result.color_losses))
    assert all(np.all(g == 0.0) for g in result.pseudo_color_grads)


def test_identical_pseudo_renders_add_nothing():
    rng = np.random.default_rng(2)
    gt = rng.uniform(size=(12, 12, 3))
    renders = [rng.uniform(size=(12, 12, 3)) for _ in range(2)]
    same = rng.uniform(size=(12, 12, 3))
    result = total_loss(renders, gt, [fake_render(same), fake_render(same)], config())
    assert result.total == sum(result.color_losses)
    assert result.pseudo_loss == 0.0


def test_constant_images_by_hand():
    renders = [np.full((11, 11, 3), 0.5)]
    gt = np.full((11, 11, 3), 0.7)
    pseudo = [fake_render(np.full((11, 11, 3), 0.3)), fake_render(np.full((11, 11, 3), 0.6))]
    result = total_loss(renders, gt, pseudo, config(lambda_dssim=0.2, lambda_pseudo=0.5))
    train_part = 0.8 * 0.2 + 0.2 * (1 - constant_ssim(0.5, 0.7)) / 2
    pseudo_part = 0.8 * 0.3 + 0.2 * (1 - constant_ssim(0.3, 0.6)) / 2
    assert result.color_losses[0] == pytest.approx(train_part, abs=1e-6)
    assert result.pseudo_loss == pytest.approx(pseudo_part, abs=1e-6)
    assert result.total == pytest.approx(train_part + 0.5 * pseudo_part, abs=1e-6)


def test_three_fields_sum_over_pairs():
    rng = np.random.default_rng(3)
    colors = [rng.uniform(size=(12, 12, 3)) for _ in range(3)]
    result = total_loss([colors[0]], colors[0], [fake_render(c) for c in colors], config(lambda_dssim=0.0))
    pairs = [(0, 1), (0, 2), (1, 2)]
    expected = sum(np.mean(np.abs(colors[i] - colors[j])) for i, j in pairs)
    assert result.pseudo_loss == pytest.approx(expected)


def test_pearson_examples(caplog):
    depth = np.random.default_rng(4).uniform(1, 5, size=(8, 8))
    assert pearson_depth_coreg(depth, 2 * depth + 1).loss == pytest.approx(0.0, abs=1e-12)
    assert pearson_depth_coreg(depth, 10 - depth).loss == pytest.approx(2.0)
    with caplog.at_level(logging.WARNING):
        flat = pearson_depth_coreg(np.full((8, 8), 3.0), depth)
    assert flat.degenerate and flat.loss == 0.0
    assert np.all(flat.grad_a == 0.0)
    assert "Pearson" in caplog.text


def test_pearson_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    a = rng.uniform(1, 5, size=(6, 6))
    b = rng.uniform(1, 5, size=(6, 6))
    mask = rng.uniform(size=(6, 6)) > 0.3
    result = pearson_depth_coreg(a, b, mask)
    step = 1e-6
    for i in range(36):
        plus, minus = a.copy(), a.copy()
        plus.reshape(-1)[i] += step
        minus.reshape(-1)[i] -= step
        numeric = (pearson_depth_coreg(plus, b, mask).loss - pearson_depth_coreg(minus, b, mask).loss) / (2 * step)
        assert result.grad_a.reshape(-1)[i] == pytest.approx(numeric, rel=1e-4, abs=1e-8)


def test_depth_term_uses_valid_pixels_only():
    rng = np.random.default_rng(6)
    color = rng.uniform(size=(12, 12, 3))
    depth = rng.uniform(1, 5, size=(12, 12))
    alpha = np.ones((12, 12))
    alpha[:, :6] = 0.1
    flipped = depth.copy()
    flipped[:, :6] = 10 - depth[:, :6]
    pseudo = [fake_render(color, depth, alpha), fake_render(color, flipped, alpha)]
    result = total_loss([color], color, pseudo, config(lambda_depth=0.5), use_depth=True)
    assert result.depth_loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(result.pseudo_depth_grads[0][:, :6] == 0.0)
