"""
Evaluación de un campo sobre las vistas de prueba de un dataset
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from metrics.geometry_metrics import abs_error_rel, depth_valid_mask, fitness_rmse
from metrics.image_metrics import SSIM_WINDOW, psnr, ssim
from models.errors import DatasetError
from rendering.projection import RasterSettings
from rendering.rasterizer import render

logger = logging.getLogger(__name__)

DEFAULT_TAU_FRACTION = 0.05


@dataclass(frozen=True)
class ViewEvaluation:
    view: int
    psnr: float
    ssim: float
    abs_error_rel: float


@dataclass
class EvaluationSummary:
    rows: List[ViewEvaluation] = field(default_factory=list)
    fitness: Optional[float] = None
    rmse: Optional[float] = None

    @staticmethod
    def _mean(values):
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0 or np.all(np.isnan(values)):
            return float("nan")
        return float(np.nanmean(values))

    @property
    def mean_psnr(self):
        return self._mean([row.psnr for row in self.rows])

    @property
    def mean_ssim(self):
        return self._mean([row.ssim for row in self.rows])

    @property
    def mean_abs_error_rel(self):
        return self._mean([row.abs_error_rel for row in self.rows])


def evaluate(field, dataset, settings=RasterSettings(), tau=None, require_ground_truth=False):
    """
    PSNR/SSIM por vista de prueba, absErrorRel si hay profundidades y Fitness/RMSE
    contra el campo de verdad si existe

    Args:
        field: GaussianField a evaluar
        dataset: SceneDataset con vistas de prueba
        tau: umbral de correspondencia; por defecto 5% de la diagonal del campo de verdad
        require_ground_truth: falla si el dataset no trae campo de verdad

    Returns:
        EvaluationSummary
    """
    if dataset.n_test == 0:
        raise DatasetError("el dataset no tiene vistas de prueba")
    gt_field = dataset.ground_truth_field
    if require_ground_truth and gt_field is None:
        raise DatasetError("el dataset no incluye campo de verdad (gt_field.bin) para Fitness/RMSE")

    summary = EvaluationSummary()
    for view, (camera, gt_image) in enumerate(zip(dataset.test_cameras, dataset.test_images)):
        out = render(field, camera, dataset.background, settings)
        quality = psnr(out.color, gt_image)
        structure = ssim(out.color, gt_image) if min(camera.width, camera.height) >= SSIM_WINDOW else float("nan")
        error = float("nan")
        if dataset.test_depths is not None:
            gt_depth = dataset.test_depths[view].plane
            valid = (out.accum_alpha.plane >= 0.5) & (gt_depth > 0)
            if dataset.test_alphas is not None:
                valid &= depth_valid_mask(out.accum_alpha, dataset.test_alphas[view])
            error = abs_error_rel(out.depth, gt_depth, valid)
        summary.rows.append(ViewEvaluation(view, quality, structure, error))
        logger.debug(f"vista {view}: PSNR {quality:.3f} dB, SSIM {structure:.4f}")

    if gt_field is not None and gt_field.count > 0 and field.count > 0:
        if tau is None:
            tau = DEFAULT_TAU_FRACTION * max(gt_field.extent(), 1e-9)
        summary.fitness, summary.rmse = fitness_rmse(field, gt_field, tau)
    return summary
