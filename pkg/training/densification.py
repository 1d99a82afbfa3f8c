"""
Control adaptativo de densidad: clonar, dividir y podar primitivas
"""

import logging
from dataclasses import dataclass

import numpy as np

from models.gaussian_field import logit, quaternion_to_rotation_matrix

logger = logging.getLogger(__name__)

SPLIT_CHILDREN = 2
SPLIT_SCALE_DIVISOR = 0.8 * SPLIT_CHILDREN
RESET_OPACITY = 0.01


@dataclass(frozen=True)
class DensifyReport:
    n_cloned: int = 0
    n_split: int = 0
    n_pruned: int = 0


class DensificationStats:
    """Norma acumulada del gradiente de la media 2D (unidades NDC) y número de vistas visibles"""

    def __init__(self, count):
        self.grad_accum = np.zeros(count)
        self.denom = np.zeros(count)

    def add(self, means2d_grad, visible, width, height):
        ndc = np.asarray(means2d_grad)[visible] * np.array([width / 2.0, height / 2.0])
        self.grad_accum[visible] += np.linalg.norm(ndc, axis=1)
        self.denom[visible] += 1

    def average(self):
        out = np.zeros_like(self.grad_accum)
        seen = self.denom > 0
        out[seen] = self.grad_accum[seen] / self.denom[seen]
        return out


def sample_split_positions(field, indices, rng, n_children=SPLIT_CHILDREN):
    """
    Posiciones de los hijos muestreadas de N(μ, Σ) de cada padre

    Devuelve n_children bloques consecutivos, cada uno con un hijo por padre en el orden de `indices`
    """
    indices = np.asarray(indices)
    stds = np.tile(field.scales[indices], (n_children, 1))
    rots = np.tile(quaternion_to_rotation_matrix(field.unit_rotations[indices]), (n_children, 1, 1))
    samples = rng.normal(0.0, stds)
    return np.einsum("nij,nj->ni", rots, samples) + np.tile(field.positions[indices], (n_children, 1))


def _append(field, state, new_arrays):
    added = new_arrays["positions"].shape[0]
    params = field.parameter_arrays()
    merged = {name: np.concatenate([params[name], new_arrays[name]]) for name in params}
    state.append_zero_rows(added)
    return field.with_arrays(**merged)


def densify_and_prune(field, state, grad_norms, config, extent, rng):
    """
    Clona las primitivas pequeñas con gradiente alto, divide las grandes y poda las transparentes

    Args:
        field: GaussianField
        state: OptimizerState (filas ajustadas en sitio)
        grad_norms: norma media del gradiente 2D por primitiva
        config: TrainConfig (umbral de gradiente, percent_dense, umbral de opacidad)
        extent: extensión de la escena para separar pequeñas de grandes
        rng: generador para el muestreo de la división

    Returns:
        (campo actualizado, DensifyReport)
    """
    grads = np.nan_to_num(np.asarray(grad_norms, dtype=np.float64), nan=0.0)
    size_limit = config.percent_dense * extent
    start = field.count

    high = grads > config.densify_grad_threshold
    clone = high & (field.scales.max(axis=1, initial=0.0) <= size_limit)
    n_cloned = int(clone.sum())
    if n_cloned:
        field = _append(field, state, {name: array[clone] for name, array in field.parameter_arrays().items()})

    # los clones recién agregados tienen gradiente 0 y no se dividen
    padded = np.zeros(field.count)
    padded[:start] = grads
    split = (padded > config.densify_grad_threshold) & (field.scales.max(axis=1, initial=0.0) > size_limit)
    parents = np.flatnonzero(split)
    n_split = int(parents.size)
    if n_split:
        params = field.parameter_arrays()
        children = {
            "positions": sample_split_positions(field, parents, rng),
            "log_scales": np.tile(np.log(field.scales[parents] / SPLIT_SCALE_DIVISOR), (SPLIT_CHILDREN, 1)),
        }
        for name in ("rotations", "opacity_logits", "color_logits"):
            reps = (SPLIT_CHILDREN, 1) if params[name].ndim == 2 else SPLIT_CHILDREN
            children[name] = np.tile(params[name][parents], reps)
        field = _append(field, state, children)
        keep = np.ones(field.count, dtype=bool)
        keep[parents] = False
        field = field.take(keep)
        state.keep(keep)

    transparent = field.opacities < config.prune_opacity_threshold
    n_pruned = int(transparent.sum())
    if n_pruned:
        field = field.take(~transparent)
        state.keep(~transparent)
    state.check_rows(field)
    return field, DensifyReport(n_cloned, n_split, n_pruned)


def reset_opacity(field, state, value=RESET_OPACITY):
    """Limita la opacidad a `value` y anula los momentos de opacidad"""
    capped = np.minimum(field.opacity_logits, logit(value))
    state.reset("opacity_logits")
    return field.with_arrays(opacity_logits=capped)
