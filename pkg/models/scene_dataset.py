"""
Modelo del dataset de escena
Cámaras e imágenes de entrenamiento y prueba, con verdad de terreno opcional
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from models.camera import Camera
from models.errors import InvalidArgumentError
from models.gaussian_field import GaussianField
from models.image_buffer import ImageBuffer


@dataclass(frozen=True, eq=False)
class SceneDataset:
    train_cameras: List[Camera]
    test_cameras: List[Camera]
    train_images: List[ImageBuffer]
    test_images: List[ImageBuffer]
    test_depths: Optional[List[ImageBuffer]] = None
    test_alphas: Optional[List[ImageBuffer]] = None
    ground_truth_field: Optional[GaussianField] = None
    background: Tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        self._check_pairs(self.train_cameras, self.train_images, "train")
        self._check_pairs(self.test_cameras, self.test_images, "test")
        for name in ("test_depths", "test_alphas"):
            extra = getattr(self, name)
            if extra is not None:
                self._check_pairs(self.test_cameras, extra, name)

    @staticmethod
    def _check_pairs(cameras, images, name):
        if len(cameras) != len(images):
            raise InvalidArgumentError(
                f"{name}: {len(cameras)} cámaras pero {len(images)} imágenes")
        for index, (camera, image) in enumerate(zip(cameras, images)):
            if (image.width, image.height) != (camera.width, camera.height):
                raise InvalidArgumentError(
                    f"{name}[{index}]: imagen {image.width}x{image.height} "
                    f"y cámara {camera.width}x{camera.height}")

    @property
    def n_train(self):
        return len(self.train_cameras)

    @property
    def n_test(self):
        return len(self.test_cameras)

    def camera_extent(self):
        """Radio de las cámaras de entrenamiento respecto a su centroide (convención 3DGS)"""
        centers = np.stack([camera.center for camera in self.train_cameras])
        radius = np.linalg.norm(centers - centers.mean(axis=0), axis=1).max()
        return max(1.1 * float(radius), 1.0)

    def scene_bounds(self):
        """Caja de la escena: la del campo de verdad si existe, si no el cubo unitario"""
        if self.ground_truth_field is not None and self.ground_truth_field.count > 0:
            return self.ground_truth_field.bounding_box()
        return -np.ones(3), np.ones(3)

    def camera(self, split, index):
        cameras = self.train_cameras if split == "train" else self.test_cameras
        if not 0 <= index < len(cameras):
            raise InvalidArgumentError(f"vista {split}:{index} fuera de rango")
        return cameras[index]
