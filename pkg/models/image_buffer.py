"""
Modelo de imagen
Arreglo (alto, ancho, canales) en orden de filas; color en [0, 1] o profundidad
"""

from dataclasses import dataclass

import numpy as np

from models.errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim == 2:
            pixels = pixels[:, :, None]
        if pixels.ndim != 3 or pixels.shape[2] not in (1, 3):
            raise InvalidArgumentError(f"forma de imagen inválida: {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise InvalidArgumentError("imagen vacía")
        if not np.all(np.isfinite(pixels)):
            raise InvalidArgumentError("la imagen contiene NaN o Inf")
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]

    @property
    def plane(self):
        """Vista 2D para imágenes de un canal"""
        return self.pixels[:, :, 0]

    def equals(self, other):
        return np.array_equal(self.pixels, other.pixels)


def as_array(image):
    """Acepta ImageBuffer o ndarray y devuelve un ndarray float64"""
    if isinstance(image, ImageBuffer):
        return image.pixels
    return np.asarray(image, dtype=np.float64)
