"""
Fixtures compartidas: cámaras simples y escenas sintéticas pequeñas
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from generators.synthetic_scene import generate_synthetic_scene  # noqa: E402
from models.camera import Camera  # noqa: E402
from models.gaussian_field import GaussianField  # noqa: E402


def axis_camera(size=32, distance=4.0, focal=None):
    """Cámara con ejes alineados al mundo; el origen queda a `distance` sobre el eje óptico"""
    focal = float(size if focal is None else focal)
    return Camera(fx=focal, fy=focal, cx=size / 2.0, cy=size / 2.0, width=size, height=size,
                  rotation=(1.0, 0.0, 0.0, 0.0), translation=(0.0, 0.0, distance))


def random_field(rng, n, spread=0.5, depth_strata=True, scale_range=(0.08, 0.25)):
    """Campo aleatorio pequeño; con depth_strata las profundidades quedan separadas"""
    positions = rng.uniform(-spread, spread, size=(n, 3))
    if depth_strata:
        positions[:, 2] = np.linspace(-spread, spread, n) + rng.uniform(-0.01, 0.01, n)
    return GaussianField.from_activated(
        positions=positions,
        scales=np.exp(rng.uniform(np.log(scale_range[0]), np.log(scale_range[1]), size=(n, 3))),
        rotations=rng.normal(size=(n, 4)),
        opacities=rng.uniform(0.3, 0.8, size=n),
        colors=rng.uniform(0.2, 0.8, size=(n, 3)),
    )


def point_field(coords):
    """Campo con primitivas iguales salvo la posición"""
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    n = coords.shape[0]
    return GaussianField.from_activated(
        positions=coords, scales=np.full((n, 3), 0.1), rotations=np.tile([1, 0, 0, 0], (n, 1)),
        opacities=np.full(n, 0.5), colors=np.full((n, 3), 0.5),
    )


@pytest.fixture
def camera():
    return axis_camera()


@pytest.fixture(scope="session")
def small_scene():
    return generate_synthetic_scene(seed=7, n_gaussians=12, n_train=3, n_test=2, resolution=(32, 32))
