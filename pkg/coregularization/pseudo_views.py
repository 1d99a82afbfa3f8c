"""
Muestreo de vistas virtuales entre las dos cámaras de entrenamiento más cercanas
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from models.camera import Camera
from models.errors import InvalidArgumentError
from models.gaussian_field import normalize_quaternions, quaternion_to_rotation_matrix

logger = logging.getLogger(__name__)

DEFAULT_NOISE_SCALE = 0.05
COINCIDENT_DISTANCE = 1e-12


@dataclass(frozen=True)
class PseudoView:
    camera: Camera
    parents: Tuple[int, int]


def _to_scipy(q):
    w, x, y, z = q
    return [x, y, z, w]


def _from_scipy(q):
    x, y, z, w = q
    return np.array([w, x, y, z])


def average_rotation(q_a, q_b):
    """Interpolación esférica a 0.5 de dos cuaterniones (w, x, y, z), por el camino corto"""
    slerp = Slerp([0.0, 1.0], Rotation.from_quat([_to_scipy(q_a), _to_scipy(q_b)]))
    return _from_scipy(slerp([0.5]).as_quat()[0])


def nearest_camera(centers, index):
    """Vecino más cercano de la cámara `index`; los empates van al índice menor"""
    distances = np.linalg.norm(centers - centers[index], axis=1)
    distances[index] = np.inf
    other = int(np.argmin(distances))
    return other, float(distances[other])


def sample_pseudo_view(train_cameras, rng, noise_scale=DEFAULT_NOISE_SCALE):
    """
    Cámara virtual: punto medio de la pareja más ε y rotación promedio

    Args:
        train_cameras: lista de Camera (≥ 2)
        rng: numpy Generator
        noise_scale: desviación de ε como fracción de la distancia entre padres

    Returns:
        PseudoView
    """
    if len(train_cameras) < 2:
        raise InvalidArgumentError("se necesitan al menos dos cámaras de entrenamiento")
    if noise_scale < 0:
        raise InvalidArgumentError("noise_scale no puede ser negativo")
    centers = np.stack([camera.center for camera in train_cameras])
    first = int(rng.integers(len(train_cameras)))
    second, distance = nearest_camera(centers, first)
    parent_a, parent_b = train_cameras[first], train_cameras[second]

    if distance > COINCIDENT_DISTANCE:
        rotation = average_rotation(parent_a.rotation, parent_b.rotation)
        sigma = noise_scale * distance
    else:
        logger.warning(f"cámaras {first} y {second} coinciden; se usa la rotación de la primera")
        rotation = parent_a.rotation
        spread = float(np.mean(np.linalg.norm(centers - centers.mean(axis=0), axis=1)))
        sigma = noise_scale * (spread if spread > 0 else 1.0)

    position = 0.5 * (centers[first] + centers[second]) + rng.normal(0.0, 1.0, 3) * sigma
    rotation = normalize_quaternions(rotation)
    matrix = quaternion_to_rotation_matrix(rotation)
    camera = parent_a.with_pose(rotation, -matrix @ position)
    return PseudoView(camera=camera, parents=(first, second))
