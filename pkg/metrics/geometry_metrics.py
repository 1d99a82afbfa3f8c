"""
Métricas geométricas: Fitness/RMSE entre nubes de puntos y error relativo de profundidad
"""

import logging

import numpy as np

from coregularization.matching import knn_match
from models.errors import InvalidArgumentError
from models.image_buffer import as_array

logger = logging.getLogger(__name__)

DEPTH_ALPHA_THRESHOLD = 0.5


def _directional(source, target, tau):
    match = knn_match(source, target)
    inliers = match.distances <= tau
    fitness = float(np.mean(inliers)) if match.count else 0.0
    rmse = float(np.sqrt(np.mean(match.distances[inliers] ** 2))) if inliers.any() else float("nan")
    return fitness, rmse


def fitness_rmse(a, b, tau):
    """
    Fitness (fracción de puntos con vecino a distancia ≤ tau) y RMSE de los inliers

    Se promedian ambas direcciones; el RMSE es NaN si ninguna dirección tiene inliers
    y se ignora la dirección sin inliers al promediar.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau debe ser positivo")
    if a.count == 0 or b.count == 0:
        raise InvalidArgumentError("fitness_rmse requiere dos campos no vacíos")
    fit_ab, rmse_ab = _directional(a, b, tau)
    fit_ba, rmse_ba = _directional(b, a, tau)
    rmses = [r for r in (rmse_ab, rmse_ba) if not np.isnan(r)]
    rmse = float(np.mean(rmses)) if rmses else float("nan")
    return (fit_ab + fit_ba) / 2.0, rmse


def depth_valid_mask(alpha_a, alpha_b, threshold=DEPTH_ALPHA_THRESHOLD):
    """Píxeles con alfa acumulado ≥ threshold en ambos renders"""
    alpha_a = np.squeeze(as_array(alpha_a))
    alpha_b = np.squeeze(as_array(alpha_b))
    if alpha_a.shape != alpha_b.shape:
        raise InvalidArgumentError("máscaras alfa de formas distintas")
    return (alpha_a >= threshold) & (alpha_b >= threshold)


def abs_error_rel(pred_depth, gt_depth, valid_mask=None):
    """Media de |d − d*| / d* sobre los píxeles válidos; NaN si no hay ninguno"""
    pred = np.squeeze(as_array(pred_depth))
    gt = np.squeeze(as_array(gt_depth))
    if pred.shape != gt.shape:
        raise InvalidArgumentError(f"formas distintas: {pred.shape} y {gt.shape}")
    valid = np.ones(gt.shape, dtype=bool) if valid_mask is None else np.asarray(valid_mask, dtype=bool)
    if valid.shape != gt.shape:
        raise InvalidArgumentError("la máscara no coincide con la imagen")
    if not valid.any():
        return float("nan")
    if np.any(gt[valid] <= 0):
        raise InvalidArgumentError("la profundidad de referencia debe ser positiva en la máscara")
    return float(np.mean(np.abs(pred[valid] - gt[valid]) / gt[valid]))
