"""
Modelo del campo de gaussianas 3D
Estructura de arreglos con los parámetros pre-activación de cada primitiva
"""

from dataclasses import dataclass, replace

import numpy as np

from models.errors import InvalidArgumentError

PARAMETER_NAMES = ("positions", "log_scales", "rotations", "opacity_logits", "color_logits")
PARAMETER_WIDTHS = {"positions": 3, "log_scales": 3, "rotations": 4, "opacity_logits": 1, "color_logits": 3}


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def logit(p):
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return np.log(p / (1.0 - p))


def normalize_quaternions(q):
    """Normaliza cuaterniones (w, x, y, z) fila por fila"""
    q = np.asarray(q, dtype=np.float64)
    norms = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / np.where(norms > 0.0, norms, 1.0)


def quaternion_to_rotation_matrix(q):
    """
    Convierte cuaterniones unitarios (w, x, y, z) en matrices de rotación

    Args:
        q: arreglo (..., 4)

    Returns:
        arreglo (..., 3, 3)
    """
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rot = np.stack([
        1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
    ], axis=-1)
    return rot.reshape(q.shape[:-1] + (3, 3))


def covariance_from_scale_rotation(s, q):
    """Σ = R(q) · diag(s)² · R(q)ᵀ para escalas activadas y cuaternión unitario"""
    s = np.asarray(s, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if s.shape[-1] != 3 or q.shape[-1] != 4:
        raise InvalidArgumentError("se esperaban escalas (3,) y cuaternión (4,)")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(q))):
        raise InvalidArgumentError("escala o rotación no finita")
    if np.any(s <= 0.0):
        raise InvalidArgumentError("las escalas deben ser positivas")
    rot = quaternion_to_rotation_matrix(normalize_quaternions(q))
    m = rot * s[..., None, :]
    return m @ np.swapaxes(m, -1, -2)


@dataclass(frozen=True, eq=False)
class GaussianField:
    positions: np.ndarray
    log_scales: np.ndarray
    rotations: np.ndarray
    opacity_logits: np.ndarray
    color_logits: np.ndarray

    def __post_init__(self):
        count = None
        for name in PARAMETER_NAMES:
            array = np.asarray(getattr(self, name), dtype=np.float64)
            width = PARAMETER_WIDTHS[name]
            array = array.reshape(-1) if width == 1 else array.reshape(-1, width)
            if count is None:
                count = array.shape[0]
            elif array.shape[0] != count:
                raise InvalidArgumentError(
                    f"'{name}' tiene {array.shape[0]} filas, se esperaban {count}")
            object.__setattr__(self, name, array)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 4)), np.zeros(0), np.zeros((0, 3)))

    @classmethod
    def from_activated(cls, positions, scales, rotations, opacities, colors):
        """Crea un campo a partir de valores ya activados"""
        return cls(
            positions=np.asarray(positions, dtype=np.float64),
            log_scales=np.log(np.asarray(scales, dtype=np.float64)),
            rotations=normalize_quaternions(rotations),
            opacity_logits=logit(np.asarray(opacities, dtype=np.float64)),
            color_logits=logit(np.asarray(colors, dtype=np.float64)),
        )

    @property
    def count(self):
        return self.positions.shape[0]

    @property
    def scales(self):
        return np.exp(self.log_scales)

    @property
    def opacities(self):
        return sigmoid(self.opacity_logits)

    @property
    def colors(self):
        return sigmoid(self.color_logits)

    @property
    def unit_rotations(self):
        return normalize_quaternions(self.rotations)

    def covariances(self):
        if self.count == 0:
            return np.zeros((0, 3, 3))
        return covariance_from_scale_rotation(self.scales, self.unit_rotations)

    def parameter_arrays(self):
        """Diccionario nombre → arreglo, en el orden fijo de las clases de parámetros"""
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def with_arrays(self, **changes):
        return replace(self, **changes)

    def take(self, indices):
        """Subconjunto de primitivas (índices o máscara booleana)"""
        return GaussianField(**{name: array[indices] for name, array in self.parameter_arrays().items()})

    def concat(self, other):
        mine, theirs = self.parameter_arrays(), other.parameter_arrays()
        return GaussianField(**{name: np.concatenate([mine[name], theirs[name]]) for name in PARAMETER_NAMES})

    def bounding_box(self):
        if self.count == 0:
            return np.zeros(3), np.zeros(3)
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def extent(self):
        """Diagonal de la caja envolvente"""
        low, high = self.bounding_box()
        return float(np.linalg.norm(high - low))

    def first_non_finite(self):
        """Índice de la primera primitiva con algún parámetro no finito, o None"""
        bad = np.zeros(self.count, dtype=bool)
        for array in self.parameter_arrays().values():
            finite = np.isfinite(array)
            bad |= ~(finite if finite.ndim == 1 else finite.all(axis=1))
        hits = np.flatnonzero(bad)
        return int(hits[0]) if hits.size else None

    def equals(self, other):
        """Igualdad bit a bit de todos los arreglos"""
        return all(
            np.array_equal(a, b)
            for a, b in zip(self.parameter_arrays().values(), other.parameter_arrays().values())
        )
