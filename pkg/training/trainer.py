"""
Bucle de entrenamiento conjunto de N campos
Densificación intercalada, co-poda y co-regularización en vistas virtuales
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config.train_config import CoregHooks
from coregularization.co_pruning import CoPruneReport, co_prune
from coregularization.losses import total_loss
from coregularization.pseudo_views import sample_pseudo_view
from metrics.disagreement import measure_disagreement
from models.errors import InvalidArgumentError, NumericalError
from models.gaussian_field import GaussianField, logit
from rendering.projection import RasterSettings
from rendering.rasterizer import render, render_backward
from training.densification import DensificationStats, DensifyReport, densify_and_prune, reset_opacity
from training.optimizer import OptimizerState, optimize_step

logger = logging.getLogger(__name__)

INIT_NEIGHBOURS = 3
MIN_INIT_SCALE_SQ = 1e-7


@dataclass
class TrainingLog:
    n_fields: int
    rows: List[Dict] = field(default_factory=list)
    densify_events: List[Tuple[int, int, DensifyReport]] = field(default_factory=list)
    coprune_events: List[Tuple[int, CoPruneReport]] = field(default_factory=list)

    @property
    def columns(self):
        cols = ["iteration"]
        cols += [f"loss_field_{k}" for k in range(self.n_fields)]
        cols += ["fitness", "rmse", "psnr_between", "depth_abs_error_rel"]
        cols += [f"count_field_{k}" for k in range(self.n_fields)]
        cols += [f"copruned_field_{k}" for k in range(self.n_fields)]
        return cols

    def row_at(self, iteration):
        for row in self.rows:
            if row["iteration"] == iteration:
                return row
        return None


def training_streams(seed, n_fields, shared=False):
    """Un generador por campo, uno para la co-regularización y uno para la inicialización"""
    children = np.random.SeedSequence(seed).spawn(n_fields + 2)
    if shared:
        field_rngs = [np.random.default_rng(children[0]) for _ in range(n_fields)]
    else:
        field_rngs = [np.random.default_rng(child) for child in children[:n_fields]]
    return field_rngs, np.random.default_rng(children[n_fields]), np.random.default_rng(children[n_fields + 1])


def initialize_fields(dataset, config, rng):
    """
    Mismo conjunto inicial de puntos para todos los campos

    Puntos uniformes en la caja de la escena, escala isotrópica = raíz de la distancia
    cuadrática media a los 3 vecinos más cercanos, rotación identidad.
    """
    low, high = dataset.scene_bounds()
    n = config.init_points
    positions = rng.uniform(low, high, size=(n, 3))
    if n > 1:
        k = min(INIT_NEIGHBOURS, n - 1)
        distances, _ = cKDTree(positions).query(positions, k=k + 1)
        mean_sq = np.mean(np.asarray(distances).reshape(n, -1)[:, 1:] ** 2, axis=1)
    else:
        mean_sq = np.full(n, 0.01)
    scales = np.sqrt(np.maximum(mean_sq, MIN_INIT_SCALE_SQ))
    base = GaussianField(
        positions=positions,
        log_scales=np.repeat(np.log(scales)[:, None], 3, axis=1),
        rotations=np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)),
        opacity_logits=np.full(n, logit(config.init_opacity)),
        color_logits=np.full((n, 3), logit(config.init_color)),
    )
    return [base.take(np.arange(n)) for _ in range(config.n_fields)]


def checkpoint_iterations(config):
    marks = {it for it in range(config.log_every, config.iterations + 1, config.log_every)}
    first = config.first_densify_iteration()
    if first is not None and first > 1:
        marks.add(first - 1)
    last = config.last_densify_iteration()
    if last is not None:
        marks.add(last)
    marks.add(config.iterations)
    return marks


def _check_finite(value, iteration, field_index, what):
    if not np.all(np.isfinite(value)):
        raise NumericalError(f"{what} no finito", iteration, field_index)


def train(dataset, config, hooks: Optional[CoregHooks] = None, fields=None):
    """
    Entrena config.n_fields campos a la vez sobre las mismas vistas

    Args:
        dataset: SceneDataset
        config: TrainConfig validado
        hooks: CoregHooks; None equivale a todos apagados
        fields: campos iniciales opcionales (por defecto initialize_fields)

    Returns:
        (lista de campos entrenados, TrainingLog); el campo 0 es el que se conserva
    """
    config.validate()
    hooks = hooks or CoregHooks()
    n_fields = config.n_fields
    if hooks.any and n_fields < 2:
        raise InvalidArgumentError("la co-regularización requiere al menos dos campos")
    if hooks.pseudo_view and dataset.n_train < 2:
        raise InvalidArgumentError("las vistas virtuales requieren al menos dos vistas de entrenamiento")
    if dataset.n_train < 1:
        raise InvalidArgumentError("el dataset no tiene vistas de entrenamiento")

    field_rngs, coreg_rng, init_rng = training_streams(config.seed, n_fields, config.shared_field_streams)
    if fields is None:
        fields = initialize_fields(dataset, config, init_rng)
    elif len(fields) != n_fields:
        raise InvalidArgumentError(f"se dieron {len(fields)} campos para n_fields={n_fields}")
    fields = list(fields)
    states = [OptimizerState.for_field(f) for f in fields]
    stats = [DensificationStats(f.count) for f in fields]

    settings = RasterSettings(threads=config.threads)
    background = np.asarray(config.background)
    extent = dataset.camera_extent()
    low, high = dataset.scene_bounds()
    tau = config.resolve_tau(np.linalg.norm(high - low))
    pseudo_start = config.pseudo_view_start()
    checkpoints = checkpoint_iterations(config)
    log = TrainingLog(n_fields=n_fields)
    copruned = [0] * n_fields
    densify_count = 0
    logger.info(f"entrenando {n_fields} campo(s), {config.iterations} iteraciones, tau={tau:.4g}")

    for it in range(1, config.iterations + 1):
        view = (it - 1) % dataset.n_train
        camera = dataset.train_cameras[view]
        gt = dataset.train_images[view]
        outputs = [render(f, camera, background, settings) for f in fields]

        pseudo = None
        pseudo_outputs = None
        if hooks.pseudo_view and pseudo_start is not None and it >= pseudo_start:
            pseudo = sample_pseudo_view(dataset.train_cameras, coreg_rng, config.pseudo_noise_scale)
            pseudo_outputs = [render(f, pseudo.camera, background, settings) for f in fields]

        losses = total_loss([out.color for out in outputs], gt, pseudo_outputs, config, use_depth=hooks.depth_pearson)
        for k, value in enumerate(losses.color_losses):
            _check_finite(value, it, k, "pérdida")
        _check_finite(losses.total, it, 0, "pérdida total")

        lrs = config.learning_rates(it, extent)
        for k in range(n_fields):
            grads = render_backward(fields[k], camera, outputs[k], losses.color_grads[k])
            if it <= config.densify_until:
                stats[k].add(grads.means2d, grads.visible, camera.width, camera.height)
            if pseudo is not None:
                grads = grads + render_backward(
                    fields[k], pseudo.camera, pseudo_outputs[k],
                    losses.pseudo_color_grads[k], losses.pseudo_depth_grads[k])
            for array in grads.parameter_arrays().values():
                _check_finite(array, it, k, "gradiente")
            fields[k] = optimize_step(fields[k], states[k], grads, lrs)
            bad = fields[k].first_non_finite()
            if bad is not None:
                raise NumericalError(f"parámetro no finito en la primitiva {bad}", it, k)

        if config.is_densify_iteration(it):
            densify_count += 1
            for k in range(n_fields):
                fields[k], report = densify_and_prune(
                    fields[k], states[k], stats[k].average(), config, extent, field_rngs[k])
                log.densify_events.append((it, k, report))
                logger.info(
                    f"it {it} campo {k}: +{report.n_cloned} clonadas, {report.n_split} divididas, "
                    f"-{report.n_pruned} podadas, total {fields[k].count}")
            if hooks.co_pruning and config.is_coprune_iteration(it, densify_count):
                fields, report = co_prune(fields, states, tau)
                log.coprune_events.append((it, report))
                for k, removed in enumerate(report.n_pruned):
                    copruned[k] += removed
                logger.info(f"it {it} co-poda: {report.n_pruned}")
            stats = [DensificationStats(f.count) for f in fields]

        if config.is_opacity_reset(it):
            fields = [reset_opacity(f, s) for f, s in zip(fields, states)]

        for f, s in zip(fields, states):
            s.check_rows(f)

        if it in checkpoints:
            row = {"iteration": it}
            for k, value in enumerate(losses.color_losses):
                row[f"loss_field_{k}"] = value
            row.update(fitness=float("nan"), rmse=float("nan"), psnr_between=float("nan"),
                       depth_abs_error_rel=float("nan"))
            if n_fields >= 2:
                report = measure_disagreement(fields[0], fields[1], dataset.test_cameras or dataset.train_cameras,
                                              tau, background, settings)
                row.update(fitness=report.fitness, rmse=report.rmse, psnr_between=report.mean_psnr_between,
                           depth_abs_error_rel=report.mean_depth_abs_error_rel)
            for k in range(n_fields):
                row[f"count_field_{k}"] = fields[k].count
                row[f"copruned_field_{k}"] = copruned[k]
            log.rows.append(row)
            logger.info(
                f"it {it}: pérdidas {[round(v, 5) for v in losses.color_losses]}, "
                f"conteos {[f.count for f in fields]}, PSNR entre campos {row['psnr_between']:.3f}")

    return fields, log
