"""
Rasterizador diferenciable de gaussianas en CPU
Composición alfa de adelante hacia atrás, profundidad esperada y gradientes analíticos
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from models.errors import InvalidArgumentError, RenderError
from models.gaussian_field import PARAMETER_NAMES
from models.image_buffer import ImageBuffer
from rendering.projection import RasterSettings, project_field

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PixelBlock:
    y0: int
    y1: int
    x0: int
    x1: int
    contributors: np.ndarray

    def pixel_coords(self):
        ys, xs = np.mgrid[self.y0:self.y1, self.x0:self.x1]
        return xs.ravel().astype(np.float64), ys.ravel().astype(np.float64)


@dataclass(frozen=True, eq=False)
class RenderOutput:
    color: ImageBuffer
    depth: ImageBuffer
    accum_alpha: ImageBuffer
    transmittance: np.ndarray
    depth_numerator: np.ndarray
    projection: object
    blocks: Tuple[PixelBlock, ...]
    background: np.ndarray
    settings: RasterSettings


@dataclass(eq=False)
class GradientSet:
    """Gradientes por clase de parámetro, con las mismas formas que el campo"""
    positions: np.ndarray
    log_scales: np.ndarray
    rotations: np.ndarray
    opacity_logits: np.ndarray
    color_logits: np.ndarray
    means2d: np.ndarray
    visible: np.ndarray

    @classmethod
    def zeros(cls, count):
        return cls(
            positions=np.zeros((count, 3)), log_scales=np.zeros((count, 3)),
            rotations=np.zeros((count, 4)), opacity_logits=np.zeros(count),
            color_logits=np.zeros((count, 3)), means2d=np.zeros((count, 2)),
            visible=np.zeros(count, dtype=bool),
        )

    def parameter_arrays(self):
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def __add__(self, other):
        summed = {name: getattr(self, name) + getattr(other, name) for name in PARAMETER_NAMES}
        return GradientSet(means2d=self.means2d + other.means2d, visible=self.visible | other.visible, **summed)


def _make_blocks(projection, width, height, block_size):
    """Parte la imagen en bloques y lista las gaussianas que tocan cada uno, en orden de profundidad"""
    order = projection.order
    means = projection.means2d[order]
    radii = projection.radii[order]
    blocks = []
    for y0 in range(0, height, block_size):
        y1 = min(y0 + block_size, height)
        for x0 in range(0, width, block_size):
            x1 = min(x0 + block_size, width)
            hit = (
                (radii >= 0)
                & (means[:, 0] + radii >= x0) & (means[:, 0] - radii <= x1 - 1)
                & (means[:, 1] + radii >= y0) & (means[:, 1] - radii <= y1 - 1)
            )
            blocks.append(PixelBlock(y0, y1, x0, x1, order[hit]))
    return tuple(blocks)


def _block_weights(projection, block, settings):
    """Recalcula α', transmitancias y pesos de un bloque (mismo código en forward y backward)"""
    idx = block.contributors
    px, py = block.pixel_coords()
    dx = px[None, :] - projection.means2d[idx, 0][:, None]
    dy = py[None, :] - projection.means2d[idx, 1][:, None]
    conic = projection.conics[idx]
    power = -0.5 * (conic[:, 0:1] * dx * dx + conic[:, 2:3] * dy * dy) - conic[:, 1:2] * dx * dy
    gauss = np.exp(np.minimum(power, 0.0))
    alpha = projection.opacities[idx][:, None] * gauss

    valid = alpha >= settings.alpha_min
    passing = np.cumprod(1.0 - np.where(valid, alpha, 0.0), axis=0)
    # T decrece a lo largo de la lista, así que la terminación temprana deja un prefijo
    included = valid & (passing >= settings.transmittance_min)
    kept = np.cumprod(1.0 - np.where(included, alpha, 0.0), axis=0)
    n_pixels = px.shape[0]
    if idx.size:
        t_before = np.vstack([np.ones((1, n_pixels)), kept[:-1]])
        t_final = kept[-1]
    else:
        t_before = np.ones((0, n_pixels))
        t_final = np.ones(n_pixels)
    weights = np.where(included, alpha, 0.0) * t_before
    return {
        "dx": dx, "dy": dy, "gauss": gauss, "alpha": alpha, "included": included,
        "t_before": t_before, "t_final": t_final, "weights": weights,
    }


def _map_blocks(fn, blocks, threads):
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, blocks))
    return [fn(block) for block in blocks]


def render(field, camera, background=(0.0, 0.0, 0.0), settings=RasterSettings()):
    """
    Renderiza color, profundidad esperada y alfa acumulado

    Args:
        field: GaussianField
        camera: Camera
        background: color RGB compuesto con la transmitancia restante
        settings: RasterSettings

    Returns:
        RenderOutput con los datos de repetición para render_backward
    """
    bad = field.first_non_finite()
    if bad is not None:
        raise RenderError("parámetro no finito", bad)
    background = np.asarray(background, dtype=np.float64).reshape(3)
    width, height = camera.width, camera.height

    projection = project_field(field, camera, settings)
    blocks = _make_blocks(projection, width, height, settings.block_size)

    def composite(block):
        state = _block_weights(projection, block, settings)
        weights = state["weights"]
        idx = block.contributors
        color = weights.T @ projection.colors[idx] + state["t_final"][:, None] * background
        depth_num = weights.T @ projection.depths[idx]
        accum = weights.sum(axis=0)
        return color, depth_num, accum, state["t_final"]

    results = _map_blocks(composite, blocks, settings.threads)

    color = np.zeros((height, width, 3))
    depth_num = np.zeros((height, width))
    accum = np.zeros((height, width))
    transmittance = np.ones((height, width))
    for block, (c, d, a, t) in zip(blocks, results):
        shape = (block.y1 - block.y0, block.x1 - block.x0)
        color[block.y0:block.y1, block.x0:block.x1] = c.reshape(shape + (3,))
        depth_num[block.y0:block.y1, block.x0:block.x1] = d.reshape(shape)
        accum[block.y0:block.y1, block.x0:block.x1] = a.reshape(shape)
        transmittance[block.y0:block.y1, block.x0:block.x1] = t.reshape(shape)

    depth = depth_num / np.maximum(accum, settings.depth_eps)
    return RenderOutput(
        color=ImageBuffer(np.clip(color, 0.0, 1.0)),
        depth=ImageBuffer(depth),
        accum_alpha=ImageBuffer(np.clip(accum, 0.0, 1.0)),
        transmittance=transmittance,
        depth_numerator=depth_num,
        projection=projection,
        blocks=blocks,
        background=background,
        settings=settings,
    )


def _check_upstream(array, shape, name):
    if array is None:
        return np.zeros(shape)
    array = np.asarray(array, dtype=np.float64)
    if array.shape == shape[:2] + (1,) and len(shape) == 2:
        array = array[:, :, 0]
    if array.shape != shape:
        raise InvalidArgumentError(f"gradiente de {name} con forma {array.shape}, se esperaba {shape}")
    return array


def render_backward(field, camera, output, grad_color, grad_depth=None, grad_alpha=None):
    """
    Adjunto analítico de render para μ, s, q, α y f (espacio pre-activación)

    Args:
        field: el mismo GaussianField usado en render
        camera: la misma Camera
        output: RenderOutput devuelto por render
        grad_color: dL/dcolor (alto, ancho, 3)
        grad_depth: dL/dprofundidad (alto, ancho), opcional
        grad_alpha: dL/dalfa acumulado (alto, ancho), opcional

    Returns:
        GradientSet; las primitivas descartadas reciben cero
    """
    projection = output.projection
    if projection.count != field.count:
        raise InvalidArgumentError("el RenderOutput no corresponde a este campo")
    height, width = camera.height, camera.width
    grad_color = _check_upstream(grad_color, (height, width, 3), "color")
    grad_depth = _check_upstream(grad_depth, (height, width), "profundidad")
    grad_alpha = _check_upstream(grad_alpha, (height, width), "alfa")
    settings = output.settings

    # profundidad = numerador / max(alfa, eps)
    accum = output.accum_alpha.plane
    denom = np.maximum(accum, settings.depth_eps)
    grad_depth_num = grad_depth / denom
    grad_accum = grad_alpha + np.where(
        accum > settings.depth_eps, -grad_depth * output.depth_numerator / denom ** 2, 0.0)

    background = output.background

    def backward_block(block):
        idx = block.contributors
        n = idx.size
        if n == 0:
            return None
        state = _block_weights(projection, block, settings)
        sl = (slice(block.y0, block.y1), slice(block.x0, block.x1))
        up_color = grad_color[sl].reshape(-1, 3)
        up_depth = grad_depth_num[sl].ravel()
        up_accum = grad_accum[sl].ravel()

        weights, alpha, gauss = state["weights"], state["alpha"], state["gauss"]
        feature_dot = (projection.colors[idx] @ up_color.T
                       + projection.depths[idx][:, None] * up_depth[None, :]
                       + up_accum[None, :])
        contrib = weights * feature_dot
        behind = np.cumsum(contrib[::-1], axis=0)[::-1]
        behind = np.vstack([behind[1:], np.zeros((1, behind.shape[1]))])
        behind += state["t_final"] * (up_color @ background)
        one_minus = 1.0 - alpha
        ratio = np.divide(behind, one_minus, out=np.zeros_like(behind), where=one_minus > 0)
        d_alpha = np.where(state["included"], state["t_before"] * feature_dot - ratio, 0.0)

        d_color = weights @ up_color
        d_depth = weights @ up_depth
        d_opacity = (d_alpha * gauss).sum(axis=1)
        g = d_alpha * projection.opacities[idx][:, None] * gauss
        dx, dy = state["dx"], state["dy"]
        conic = projection.conics[idx]
        d_mean = np.stack([
            (g * (conic[:, 0:1] * dx + conic[:, 1:2] * dy)).sum(axis=1),
            (g * (conic[:, 1:2] * dx + conic[:, 2:3] * dy)).sum(axis=1),
        ], axis=1)
        # gradiente de la matriz completa del cónico; cada entrada fuera de la diagonal por separado
        d_conic = np.stack([
            (-0.5 * g * dx * dx).sum(axis=1),
            (-0.5 * g * dx * dy).sum(axis=1),
            (-0.5 * g * dy * dy).sum(axis=1),
        ], axis=1)
        return idx, d_color, d_depth, d_opacity, d_mean, d_conic

    partials = _map_blocks(backward_block, output.blocks, settings.threads)

    n = field.count
    d_color = np.zeros((n, 3))
    d_depth = np.zeros(n)
    d_opacity = np.zeros(n)
    d_mean = np.zeros((n, 2))
    d_conic = np.zeros((n, 3))
    for part in partials:
        if part is None:
            continue
        idx = part[0]
        d_color[idx] += part[1]
        d_depth[idx] += part[2]
        d_opacity[idx] += part[3]
        d_mean[idx] += part[4]
        d_conic[idx] += part[5]

    grads = GradientSet.zeros(n)
    vis = projection.visible
    grads.visible = vis.copy()
    if not vis.any():
        return grads
    _chain_to_parameters(projection, camera, vis, d_color, d_depth, d_opacity, d_mean, d_conic, grads)
    return grads


def _chain_to_parameters(projection, camera, vis, d_color, d_depth, d_opacity, d_mean, d_conic, grads):
    """Regla de la cadena desde las cantidades 2D hasta los parámetros pre-activación"""
    conic = projection.conics[vis]
    con = np.empty((conic.shape[0], 2, 2))
    con[:, 0, 0], con[:, 0, 1], con[:, 1, 0], con[:, 1, 1] = conic[:, 0], conic[:, 1], conic[:, 1], conic[:, 2]
    g_con = np.empty_like(con)
    g_con[:, 0, 0], g_con[:, 0, 1], g_con[:, 1, 0], g_con[:, 1, 1] = (
        d_conic[vis, 0], d_conic[vis, 1], d_conic[vis, 1], d_conic[vis, 2])
    g_cov2d = -con @ g_con @ con

    world_to_cam = camera.rotation_matrix
    jac = projection.jacobians[vis]
    t = jac @ world_to_cam
    cov3d = projection.cov3d[vis]
    g_cov3d = np.swapaxes(t, 1, 2) @ g_cov2d @ t
    g_t = 2.0 * g_cov2d @ t @ cov3d
    g_jac = g_t @ world_to_cam.T

    p = projection.cam_points[vis]
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    fx, fy = camera.fx, camera.fy
    gm = d_mean[vis]
    g_p = np.zeros_like(p)
    g_p[:, 0] = fx / z * gm[:, 0] - fx / z ** 2 * g_jac[:, 0, 2]
    g_p[:, 1] = fy / z * gm[:, 1] - fy / z ** 2 * g_jac[:, 1, 2]
    g_p[:, 2] = (
        d_depth[vis]
        - fx * x / z ** 2 * gm[:, 0] - fy * y / z ** 2 * gm[:, 1]
        - fx / z ** 2 * g_jac[:, 0, 0] + 2 * fx * x / z ** 3 * g_jac[:, 0, 2]
        - fy / z ** 2 * g_jac[:, 1, 1] + 2 * fy * y / z ** 3 * g_jac[:, 1, 2]
    )
    grads.positions[vis] = g_p @ world_to_cam

    rot = projection.rotation_matrices[vis]
    scales = projection.scales[vis]
    m = rot * scales[:, None, :]
    g_m = 2.0 * g_cov3d @ m
    g_scale = np.einsum("nik,nik->nk", g_m, rot)
    grads.log_scales[vis] = g_scale * scales
    g_rot = g_m * scales[:, None, :]

    q = projection.unit_rotations[vis]
    w, qx, qy, qz = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    G = g_rot
    g_q = np.stack([
        2 * (-qz * G[:, 0, 1] + qy * G[:, 0, 2] + qz * G[:, 1, 0] - qx * G[:, 1, 2] - qy * G[:, 2, 0] + qx * G[:, 2, 1]),
        2 * (qy * G[:, 0, 1] + qz * G[:, 0, 2] + qy * G[:, 1, 0] - 2 * qx * G[:, 1, 1] - w * G[:, 1, 2]
             + qz * G[:, 2, 0] + w * G[:, 2, 1] - 2 * qx * G[:, 2, 2]),
        2 * (-2 * qy * G[:, 0, 0] + qx * G[:, 0, 1] + w * G[:, 0, 2] + qx * G[:, 1, 0] + qz * G[:, 1, 2]
             - w * G[:, 2, 0] + qz * G[:, 2, 1] - 2 * qy * G[:, 2, 2]),
        2 * (-2 * qz * G[:, 0, 0] - w * G[:, 0, 1] + qx * G[:, 0, 2] + w * G[:, 1, 0] - 2 * qz * G[:, 1, 1]
             + qy * G[:, 1, 2] + qx * G[:, 2, 0] + qy * G[:, 2, 1]),
    ], axis=1)
    norms = projection.rotation_norms[vis]
    radial = np.sum(g_q * q, axis=1, keepdims=True)
    grads.rotations[vis] = (g_q - q * radial) / norms[:, None]

    opacity = projection.opacities[vis]
    grads.opacity_logits[vis] = d_opacity[vis] * opacity * (1.0 - opacity)
    color = projection.colors[vis]
    grads.color_logits[vis] = d_color[vis] * color * (1.0 - color)
    grads.means2d[vis] = gm
