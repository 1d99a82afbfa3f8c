"""
Desacuerdo entre campos y estudio de correlación desacuerdo-calidad
Se enmascaran los píxeles con mayor desacuerdo y se mide la calidad del resto
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.stats import spearmanr

from metrics.geometry_metrics import abs_error_rel, depth_valid_mask, fitness_rmse
from metrics.image_metrics import masked_psnr, psnr
from models.errors import InvalidArgumentError
from models.image_buffer import as_array
from rendering.projection import RasterSettings
from rendering.rasterizer import render

logger = logging.getLogger(__name__)

DEFAULT_PERCENTILES = tuple(range(0, 100, 10))


@dataclass
class DisagreementReport:
    fitness: float
    rmse: float
    view_ids: List[int] = field(default_factory=list)
    psnr_between: List[float] = field(default_factory=list)
    depth_abs_error_rel: List[float] = field(default_factory=list)

    @property
    def mean_psnr_between(self):
        return float(np.mean(self.psnr_between)) if self.psnr_between else float("nan")

    @property
    def mean_depth_abs_error_rel(self):
        values = np.asarray(self.depth_abs_error_rel, dtype=np.float64)
        if values.size == 0 or np.all(np.isnan(values)):
            return float("nan")
        return float(np.nanmean(values))


@dataclass(frozen=True)
class CurvePoint:
    percentile: float
    masked: int
    psnr: float
    abs_error_rel: float


@dataclass(frozen=True)
class StudyRow:
    view: int
    percentile: float
    masked_fraction: float
    psnr: float
    abs_error_rel: float


def _between_depth_error(out_a, out_b):
    """absErrorRel simetrizado entre dos renders, sobre píxeles densos en ambos"""
    valid = depth_valid_mask(out_a.accum_alpha, out_b.accum_alpha)
    if not valid.any():
        return float("nan")
    forward = abs_error_rel(out_a.depth, out_b.depth, valid)
    backward = abs_error_rel(out_b.depth, out_a.depth, valid)
    return (forward + backward) / 2.0


def measure_disagreement(field_a, field_b, cameras, tau, background=(0.0, 0.0, 0.0),
                         settings=RasterSettings(), view_ids=None):
    """
    Desacuerdo de puntos (Fitness/RMSE) y de render (PSNR y absErrorRel entre campos)

    Args:
        field_a, field_b: GaussianField
        cameras: vistas donde comparar los renders
        tau: distancia máxima de correspondencia

    Returns:
        DisagreementReport
    """
    if field_a.count and field_b.count:
        fitness, rmse = fitness_rmse(field_a, field_b, tau)
    else:
        fitness, rmse = 0.0, float("nan")
    report = DisagreementReport(fitness=fitness, rmse=rmse)
    ids = list(range(len(cameras))) if view_ids is None else list(view_ids)
    for view, camera in zip(ids, cameras):
        out_a = render(field_a, camera, background, settings)
        out_b = render(field_b, camera, background, settings)
        report.view_ids.append(view)
        report.psnr_between.append(psnr(out_a.color, out_b.color))
        report.depth_abs_error_rel.append(_between_depth_error(out_a, out_b))
    return report


def color_disagreement_score(render_a, render_b):
    """Diferencia absoluta media por canal, por píxel"""
    a, b = as_array(render_a), as_array(render_b)
    return np.mean(np.abs(a - b), axis=2)


def depth_disagreement_score(out_a, out_b):
    """Diferencia relativa de profundidad; cero fuera de la región densa de ambos"""
    valid = depth_valid_mask(out_a.accum_alpha, out_b.accum_alpha)
    da, db = out_a.depth.plane, out_b.depth.plane
    mean_depth = 0.5 * (da + db)
    score = np.zeros_like(da)
    score[valid] = np.abs(da[valid] - db[valid]) / mean_depth[valid]
    return score


def _masking_order(score):
    flat = np.asarray(score, dtype=np.float64).ravel()
    candidates = np.flatnonzero(flat > 0)
    # mayor puntaje primero; los empates se resuelven por índice de píxel
    order = candidates[np.argsort(-flat[candidates], kind="stable")]
    return order


def masked_quality_curve(render_color, gt_color, score, percentiles=DEFAULT_PERCENTILES,
                         render_depth=None, gt_depth=None, depth_valid=None):
    """
    Calidad de la región restante tras enmascarar el p% de píxeles con mayor desacuerdo

    Solo los píxeles con puntaje > 0 son candidatos; se enmascaran
    min(floor(p·P/100), #candidatos).

    Returns:
        lista de CurvePoint, una por percentil
    """
    color = as_array(render_color)
    gt = as_array(gt_color)
    if color.shape != gt.shape:
        raise InvalidArgumentError("render y referencia de formas distintas")
    score = np.asarray(score, dtype=np.float64)
    if score.shape != color.shape[:2]:
        raise InvalidArgumentError("el puntaje debe tener forma alto × ancho")
    total = score.size
    order = _masking_order(score)

    points = []
    for p in percentiles:
        if not 0 <= p < 100:
            raise InvalidArgumentError(f"percentil {p} fuera de [0, 100)")
        n_masked = min(int(np.floor(p * total / 100.0)), order.size)
        keep = np.ones(total, dtype=bool)
        keep[order[:n_masked]] = False
        keep = keep.reshape(score.shape)
        error = float("nan")
        if render_depth is not None and gt_depth is not None:
            region = keep if depth_valid is None else keep & np.asarray(depth_valid, dtype=bool)
            error = abs_error_rel(render_depth, gt_depth, region)
        points.append(CurvePoint(float(p), n_masked, masked_psnr(color, gt, keep), error))
    return points


def disagreement_study(field_a, field_b, gt_renders, views, percentiles=DEFAULT_PERCENTILES,
                       gt_depths=None, gt_alphas=None, kind="color",
                       background=(0.0, 0.0, 0.0), settings=RasterSettings()):
    """
    Curva de calidad del campo A frente al porcentaje enmascarado, por vista

    Args:
        field_a: campo cuya calidad se mide (el que se conserva)
        field_b: campo con el que se calcula el desacuerdo
        gt_renders: imágenes de referencia por vista
        views: cámaras
        kind: "color" o "depth", el puntaje usado para enmascarar

    Returns:
        lista de StudyRow, una por (vista, percentil)
    """
    if kind not in ("color", "depth"):
        raise InvalidArgumentError(f"tipo de estudio desconocido: {kind}")
    if len(gt_renders) != len(views):
        raise InvalidArgumentError("una imagen de referencia por vista")
    rows = []
    for view, (camera, gt) in enumerate(zip(views, gt_renders)):
        out_a = render(field_a, camera, background, settings)
        out_b = render(field_b, camera, background, settings)
        if kind == "color":
            score = color_disagreement_score(out_a.color, out_b.color)
        else:
            score = depth_disagreement_score(out_a, out_b)
        gt_depth = gt_depths[view] if gt_depths is not None else None
        valid = None
        if gt_depth is not None:
            valid = (out_a.accum_alpha.plane >= 0.5) & (_plane(gt_depth) > 0)
            if gt_alphas is not None:
                valid &= depth_valid_mask(out_a.accum_alpha, gt_alphas[view])
        curve = masked_quality_curve(
            out_a.color, gt, score, percentiles,
            render_depth=out_a.depth if gt_depth is not None else None,
            gt_depth=gt_depth, depth_valid=valid,
        )
        for point in curve:
            rows.append(StudyRow(view, point.percentile, point.masked / score.size, point.psnr, point.abs_error_rel))
    return rows


def curve_trend(rows):
    """Correlación de Spearman entre percentil y PSNR medio por percentil"""
    percentiles = sorted({row.percentile for row in rows})
    means = [float(np.mean([row.psnr for row in rows if row.percentile == p])) for p in percentiles]
    if len(percentiles) < 2 or np.ptp(means) == 0:
        return 0.0
    rho, _ = spearmanr(percentiles, means)
    return float(rho)


def _plane(image):
    array = as_array(image)
    return array[:, :, 0] if array.ndim == 3 else array
