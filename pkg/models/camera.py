"""
Modelo de cámara pinhole
Rotación y traslación de mundo a cámara; eje z hacia adelante, y hacia abajo
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from models.errors import InvalidArgumentError
from models.gaussian_field import normalize_quaternions, quaternion_to_rotation_matrix


def rotation_matrix_to_quaternion(matrix):
    """Matriz de rotación → cuaternión (w, x, y, z) con w >= 0"""
    x, y, z, w = Rotation.from_matrix(matrix).as_quat()
    q = np.array([w, x, y, z])
    return -q if q[0] < 0 else q


@dataclass(frozen=True, eq=False)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidArgumentError("fx y fy deben ser positivos")
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError("la resolución mínima es 1x1")
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise InvalidArgumentError("pose de cámara no finita")
        object.__setattr__(self, "rotation", normalize_quaternions(rotation))
        object.__setattr__(self, "translation", translation)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @classmethod
    def look_at(cls, center, target, fx, fy, width, height, up=(0.0, 0.0, 1.0)):
        """Cámara ubicada en `center` mirando hacia `target`"""
        center = np.asarray(center, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - center
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        if np.linalg.norm(right) < 1e-9:
            right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        matrix = np.stack([right, down, forward])
        return cls(
            fx=float(fx), fy=float(fy), cx=width / 2.0, cy=height / 2.0,
            width=width, height=height,
            rotation=rotation_matrix_to_quaternion(matrix),
            translation=-matrix @ center,
        )

    @property
    def rotation_matrix(self):
        return quaternion_to_rotation_matrix(self.rotation)

    @property
    def center(self):
        """Posición de la cámara en coordenadas de mundo"""
        return -self.rotation_matrix.T @ self.translation

    @property
    def resolution(self):
        return self.width, self.height

    def with_pose(self, rotation, translation):
        return Camera(self.fx, self.fy, self.cx, self.cy, self.width, self.height, rotation, translation)

    def to_dict(self):
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "w": self.width, "h": self.height,
            "quat": [float(v) for v in self.rotation],
            "trans": [float(v) for v in self.translation],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            fx=data["fx"], fy=data["fy"], cx=data["cx"], cy=data["cy"],
            width=data["w"], height=data["h"],
            rotation=data["quat"], translation=data["trans"],
        )
