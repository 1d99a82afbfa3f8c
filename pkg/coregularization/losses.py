"""
Pérdidas de entrenamiento y de co-regularización
L = Σ_k L_color(k) + λ_p Σ_pares R_pcolor + λ_depth Σ_pares (1 − Pearson)
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional

import numpy as np

from metrics.geometry_metrics import depth_valid_mask
from metrics.image_metrics import photometric_loss
from models.errors import InvalidArgumentError
from models.image_buffer import as_array

logger = logging.getLogger(__name__)

MIN_PEARSON_PIXELS = 2


@dataclass
class DepthCorrelation:
    loss: float
    grad_a: np.ndarray
    grad_b: np.ndarray
    degenerate: bool = False


@dataclass
class LossBreakdown:
    total: float
    color_losses: List[float]
    color_grads: List[np.ndarray]
    pseudo_loss: float = 0.0
    depth_loss: float = 0.0
    pseudo_color_grads: Optional[List[np.ndarray]] = None
    pseudo_depth_grads: Optional[List[np.ndarray]] = None
    warnings: List[str] = field(default_factory=list)


def color_coreg_loss(render_a, render_b, lambda_dssim):
    """R_pcolor = (1 − λ)·L1 + λ·D-SSIM entre dos renders; gradientes hacia ambos"""
    a, b = as_array(render_a), as_array(render_b)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"renders de formas distintas: {a.shape} y {b.shape}")
    return photometric_loss(a, b, lambda_dssim)


def pearson_depth_coreg(depth_a, depth_b, valid_mask=None):
    """
    1 − correlación de Pearson entre dos mapas de profundidad sobre los píxeles válidos

    Con menos de dos píxeles o varianza nula en alguno la pérdida es 0 y se marca degenerada.
    """
    a = np.asarray(as_array(depth_a), dtype=np.float64)
    b = np.asarray(as_array(depth_b), dtype=np.float64)
    if a.ndim == 3:
        a, b = a[:, :, 0], b[:, :, 0]
    if a.shape != b.shape:
        raise InvalidArgumentError(f"profundidades de formas distintas: {a.shape} y {b.shape}")
    valid = np.ones(a.shape, dtype=bool) if valid_mask is None else np.asarray(valid_mask, dtype=bool)
    grad_a = np.zeros_like(a)
    grad_b = np.zeros_like(b)

    xa, xb = a[valid], b[valid]
    if xa.size < MIN_PEARSON_PIXELS or np.ptp(xa) == 0 or np.ptp(xb) == 0:
        logger.warning("profundidad constante o sin píxeles válidos; correlación de Pearson indefinida")
        return DepthCorrelation(0.0, grad_a, grad_b, degenerate=True)
    x = xa - xa.mean()
    y = xb - xb.mean()
    sxx, syy, sxy = float(x @ x), float(y @ y), float(x @ y)
    norm = np.sqrt(sxx * syy)
    r = sxy / norm
    grad_a[valid] = -(y / norm - r * x / sxx)
    grad_b[valid] = -(x / norm - r * y / syy)
    return DepthCorrelation(1.0 - r, grad_a, grad_b)


def total_loss(train_renders, train_gt, pseudo_renders=None, config=None, use_depth=False):
    """
    Pérdida total de una iteración y gradientes por render

    Args:
        train_renders: color de cada campo en la vista de entrenamiento
        train_gt: imagen de referencia de esa vista
        pseudo_renders: RenderOutput de cada campo en la vista virtual, o None
        config: objeto con lambda_dssim, lambda_pseudo y lambda_depth
        use_depth: activa el término de Pearson en la vista virtual

    Returns:
        LossBreakdown
    """
    lambda_dssim = config.lambda_dssim
    color_losses, color_grads = [], []
    for render in train_renders:
        loss, grad, _ = photometric_loss(as_array(render), as_array(train_gt), lambda_dssim)
        color_losses.append(loss)
        color_grads.append(grad)
    breakdown = LossBreakdown(total=float(sum(color_losses)), color_losses=color_losses, color_grads=color_grads)
    if pseudo_renders is None:
        return breakdown

    n = len(pseudo_renders)
    colors = [as_array(out.color) for out in pseudo_renders]
    breakdown.pseudo_color_grads = [np.zeros_like(c) for c in colors]
    breakdown.pseudo_depth_grads = [np.zeros(c.shape[:2]) for c in colors]
    for i, j in combinations(range(n), 2):
        loss, grad_i, grad_j = color_coreg_loss(colors[i], colors[j], lambda_dssim)
        breakdown.pseudo_loss += loss
        breakdown.pseudo_color_grads[i] += config.lambda_pseudo * grad_i
        breakdown.pseudo_color_grads[j] += config.lambda_pseudo * grad_j
        if use_depth and config.lambda_depth > 0:
            valid = depth_valid_mask(pseudo_renders[i].accum_alpha, pseudo_renders[j].accum_alpha)
            corr = pearson_depth_coreg(pseudo_renders[i].depth, pseudo_renders[j].depth, valid)
            if corr.degenerate:
                breakdown.warnings.append(f"Pearson degenerado entre los campos {i} y {j}")
            breakdown.depth_loss += corr.loss
            breakdown.pseudo_depth_grads[i] += config.lambda_depth * corr.grad_a
            breakdown.pseudo_depth_grads[j] += config.lambda_depth * corr.grad_b
    breakdown.total += config.lambda_pseudo * breakdown.pseudo_loss + config.lambda_depth * breakdown.depth_loss
    return breakdown
