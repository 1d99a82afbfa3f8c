"""
Proyección EWA de gaussianas 3D al plano de imagen
cov2d = J W Σ Wᵀ Jᵀ + filtro pasa-bajos, con J el jacobiano afín local del pinhole
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from models.gaussian_field import quaternion_to_rotation_matrix


@dataclass(frozen=True)
class RasterSettings:
    near: float = 0.01
    alpha_min: float = 1.0 / 255.0
    transmittance_min: float = 1e-4
    lowpass: float = 0.3
    depth_eps: float = 1e-6
    block_size: int = 16
    threads: int = 1

    @classmethod
    def exact(cls, **overrides):
        """Sin umbrales no diferenciables; para verificaciones por diferencias finitas"""
        overrides.setdefault("alpha_min", 0.0)
        overrides.setdefault("transmittance_min", 0.0)
        return cls(**overrides)


@dataclass(frozen=True)
class Projected2DGaussian:
    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float
    color: np.ndarray
    opacity: float
    source_index: int


@dataclass(frozen=True, eq=False)
class FieldProjection:
    """Proyección vectorizada de todo el campo, con los intermedios del backward"""
    visible: np.ndarray
    cam_points: np.ndarray
    depths: np.ndarray
    means2d: np.ndarray
    cov2d: np.ndarray
    conics: np.ndarray
    radii: np.ndarray
    opacities: np.ndarray
    colors: np.ndarray
    scales: np.ndarray
    unit_rotations: np.ndarray
    rotation_norms: np.ndarray
    rotation_matrices: np.ndarray
    jacobians: np.ndarray
    cov3d: np.ndarray
    order: np.ndarray

    @property
    def count(self):
        return self.visible.shape[0]


def project_field(field, camera, settings=RasterSettings()):
    """Proyecta todas las primitivas; las descartadas quedan con visible=False"""
    world_to_cam = camera.rotation_matrix
    cam_points = field.positions @ world_to_cam.T + camera.translation
    x, y, z = cam_points[:, 0], cam_points[:, 1], cam_points[:, 2]
    in_front = z > settings.near
    zs = np.where(in_front, z, 1.0)

    rotation_norms = np.linalg.norm(field.rotations, axis=1)
    unit_rotations = field.rotations / np.where(rotation_norms > 0, rotation_norms, 1.0)[:, None]
    rotation_matrices = quaternion_to_rotation_matrix(unit_rotations)
    scales = field.scales
    m = rotation_matrices * scales[:, None, :]
    cov3d = m @ np.swapaxes(m, 1, 2)

    n = field.count
    jacobians = np.zeros((n, 2, 3))
    jacobians[:, 0, 0] = camera.fx / zs
    jacobians[:, 0, 2] = -camera.fx * x / zs ** 2
    jacobians[:, 1, 1] = camera.fy / zs
    jacobians[:, 1, 2] = -camera.fy * y / zs ** 2
    t = jacobians @ world_to_cam
    cov2d = t @ cov3d @ np.swapaxes(t, 1, 2)
    cov2d[:, 0, 0] += settings.lowpass
    cov2d[:, 1, 1] += settings.lowpass

    a, b, c = cov2d[:, 0, 0], cov2d[:, 0, 1], cov2d[:, 1, 1]
    det = a * c - b * b
    det_safe = np.where(det > 0, det, 1.0)
    conics = np.stack([c / det_safe, -b / det_safe, a / det_safe], axis=1)

    means2d = np.stack([camera.fx * x / zs + camera.cx, camera.fy * y / zs + camera.cy], axis=1)
    lambda_max = 0.5 * (a + c) + np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    sigma_max = np.sqrt(np.maximum(lambda_max, 0.0))
    three_sigma = 3.0 * sigma_max
    offscreen = (
        (means2d[:, 0] + three_sigma < 0) | (means2d[:, 0] - three_sigma > camera.width - 1)
        | (means2d[:, 1] + three_sigma < 0) | (means2d[:, 1] - three_sigma > camera.height - 1)
    )
    visible = in_front & (det > 0) & ~offscreen

    opacities = field.opacities
    # Radio fuera del cual α' < alpha_min en cualquier dirección
    if settings.alpha_min > 0:
        ratio = np.maximum(opacities, 1e-300) / settings.alpha_min
        radii = np.where(ratio > 1.0, np.sqrt(2.0 * np.log(np.maximum(ratio, 1.0)) * lambda_max), -1.0)
    else:
        radii = np.full(n, np.inf)
    radii = np.where(visible, radii, -1.0)

    order = np.argsort(np.where(visible, z, np.inf), kind="stable")
    order = order[visible[order]]

    return FieldProjection(
        visible=visible, cam_points=cam_points, depths=z, means2d=means2d, cov2d=cov2d,
        conics=conics, radii=radii, opacities=opacities, colors=field.colors,
        scales=scales, unit_rotations=unit_rotations, rotation_norms=rotation_norms,
        rotation_matrices=rotation_matrices, jacobians=jacobians, cov3d=cov3d, order=order,
    )


def project_gaussian(field, index, camera, settings=RasterSettings()) -> Optional[Projected2DGaussian]:
    """Proyecta una sola primitiva; None si queda descartada"""
    projection = project_field(field.take([index]), camera, settings)
    if not projection.visible[0]:
        return None
    return Projected2DGaussian(
        mean2d=projection.means2d[0],
        cov2d=projection.cov2d[0],
        depth=float(projection.depths[0]),
        color=projection.colors[0],
        opacity=float(projection.opacities[0]),
        source_index=int(index),
    )
