"""
Generador de escenas sintéticas
Campo de verdad aleatorio, cámaras en arco y renders de referencia
"""

import logging

import numpy as np

from models.camera import Camera
from models.errors import InvalidArgumentError
from models.gaussian_field import GaussianField
from models.scene_dataset import SceneDataset
from rendering.projection import RasterSettings
from rendering.rasterizer import render

logger = logging.getLogger(__name__)

SCENE_HALF_SIZE = 0.8
CAMERA_RADIUS = 4.0
CAMERA_ELEVATION_DEG = 20.0
ARC_DEGREES = 120.0


def random_ground_truth_field(rng, n_gaussians):
    positions = rng.uniform(-SCENE_HALF_SIZE, SCENE_HALF_SIZE, size=(n_gaussians, 3))
    scales = np.exp(rng.uniform(np.log(0.05), np.log(0.2), size=(n_gaussians, 3)))
    rotations = rng.normal(size=(n_gaussians, 4))
    opacities = rng.uniform(0.5, 0.95, size=n_gaussians)
    colors = rng.uniform(0.1, 0.9, size=(n_gaussians, 3))
    return GaussianField.from_activated(positions, scales, rotations, opacities, colors)


def arc_cameras(target, azimuths_deg, width, height, radius=CAMERA_RADIUS, elevation_deg=CAMERA_ELEVATION_DEG):
    """Cámaras sobre un arco alrededor de `target`, eje +z hacia arriba, fx = fy = ancho"""
    elevation = np.radians(elevation_deg)
    cameras = []
    for azimuth in np.radians(np.asarray(azimuths_deg, dtype=np.float64)):
        offset = radius * np.array([
            np.cos(elevation) * np.cos(azimuth),
            np.cos(elevation) * np.sin(azimuth),
            np.sin(elevation),
        ])
        cameras.append(Camera.look_at(target + offset, target, fx=width, fy=width, width=width, height=height))
    return cameras


def generate_synthetic_scene(seed, n_gaussians, n_train, n_test, resolution=(64, 64),
                             background=(0.0, 0.0, 0.0), settings=RasterSettings(), arc_degrees=ARC_DEGREES):
    """
    Dataset sintético reproducible

    Args:
        seed: semilla
        n_gaussians: primitivas del campo de verdad (≥ 1)
        n_train: vistas de entrenamiento (≥ 2)
        n_test: vistas de prueba
        resolution: (ancho, alto)

    Returns:
        SceneDataset con imágenes, profundidades y alfas de prueba renderizadas del campo de verdad
    """
    if n_gaussians < 1:
        raise InvalidArgumentError("n_gaussians debe ser ≥ 1")
    if n_train < 2:
        raise InvalidArgumentError("se necesitan al menos 2 vistas de entrenamiento")
    if n_test < 0:
        raise InvalidArgumentError("n_test no puede ser negativo")
    width, height = (int(v) for v in resolution)
    if width < 1 or height < 1:
        raise InvalidArgumentError("la resolución mínima es 1x1")

    rng = np.random.default_rng(seed)
    gt_field = random_ground_truth_field(rng, n_gaussians)
    target = gt_field.positions.mean(axis=0)
    half = arc_degrees / 2.0
    train_angles = np.linspace(-half, half, n_train)
    # las vistas de prueba caen entre las de entrenamiento
    test_angles = np.linspace(-half, half, n_test + 2)[1:-1]
    train_cameras = arc_cameras(target, train_angles, width, height)
    test_cameras = arc_cameras(target, test_angles, width, height)

    train_images = [render(gt_field, camera, background, settings).color for camera in train_cameras]
    test_outputs = [render(gt_field, camera, background, settings) for camera in test_cameras]
    logger.info(f"escena sintética seed={seed}: {n_gaussians} gaussianas, {n_train}+{n_test} vistas {width}x{height}")
    return SceneDataset(
        train_cameras=train_cameras,
        test_cameras=test_cameras,
        train_images=train_images,
        test_images=[out.color for out in test_outputs],
        test_depths=[out.depth for out in test_outputs],
        test_alphas=[out.accum_alpha for out in test_outputs],
        ground_truth_field=gt_field,
        background=tuple(float(v) for v in background),
    )
