"""
Optimizador Adam por clase de parámetro
Los momentos siguen el tamaño del campo a través de densificación y poda
"""

import numpy as np

from models.errors import InvalidArgumentError
from models.gaussian_field import PARAMETER_NAMES, normalize_quaternions

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-15


def exponential_lr(step, lr_init, lr_final, max_steps):
    """Decaimiento log-lineal de lr_init a lr_final en max_steps pasos"""
    if max_steps <= 0:
        return lr_final
    t = np.clip(step / max_steps, 0.0, 1.0)
    return float(np.exp(np.log(lr_init) * (1.0 - t) + np.log(lr_final) * t))


class OptimizerState:
    """Primer y segundo momento por clase de parámetro, con un contador de pasos común"""

    def __init__(self, first, second, step=0):
        self.first = first
        self.second = second
        self.step = step

    @classmethod
    def for_field(cls, field):
        arrays = field.parameter_arrays()
        return cls(
            first={name: np.zeros_like(arrays[name]) for name in PARAMETER_NAMES},
            second={name: np.zeros_like(arrays[name]) for name in PARAMETER_NAMES},
        )

    @property
    def rows(self):
        return self.first["positions"].shape[0]

    def keep(self, mask):
        """Conserva las filas con mask=True (o los índices dados)"""
        for moments in (self.first, self.second):
            for name in PARAMETER_NAMES:
                moments[name] = moments[name][mask]

    def append_zero_rows(self, count):
        for moments in (self.first, self.second):
            for name in PARAMETER_NAMES:
                current = moments[name]
                moments[name] = np.concatenate([current, np.zeros((count,) + current.shape[1:])])

    def reset(self, name):
        self.first[name] = np.zeros_like(self.first[name])
        self.second[name] = np.zeros_like(self.second[name])

    def check_rows(self, field):
        if self.rows != field.count:
            raise AssertionError(f"momentos con {self.rows} filas y campo con {field.count} primitivas")

    def copy(self):
        return OptimizerState(
            first={name: array.copy() for name, array in self.first.items()},
            second={name: array.copy() for name, array in self.second.items()},
            step=self.step,
        )


def optimize_step(field, state, gradients, learning_rates):
    """
    Un paso de Adam en espacio pre-activación y renormalización de cuaterniones

    Args:
        field: GaussianField
        state: OptimizerState (se actualiza en sitio)
        gradients: GradientSet o dict nombre → arreglo
        learning_rates: dict nombre → tasa de aprendizaje

    Returns:
        GaussianField actualizado
    """
    if hasattr(gradients, "parameter_arrays"):
        gradients = gradients.parameter_arrays()
    params = field.parameter_arrays()
    for name in PARAMETER_NAMES:
        if np.shape(gradients[name]) != params[name].shape:
            raise InvalidArgumentError(
                f"gradiente de '{name}' con forma {np.shape(gradients[name])}, se esperaba {params[name].shape}")
    state.check_rows(field)

    state.step += 1
    correction1 = 1.0 - BETA1 ** state.step
    correction2 = 1.0 - BETA2 ** state.step
    updated = {}
    for name in PARAMETER_NAMES:
        grad = np.asarray(gradients[name], dtype=np.float64)
        m = BETA1 * state.first[name] + (1.0 - BETA1) * grad
        v = BETA2 * state.second[name] + (1.0 - BETA2) * grad * grad
        state.first[name], state.second[name] = m, v
        step = learning_rates[name] * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
        updated[name] = params[name] - step
    updated["rotations"] = normalize_quaternions(updated["rotations"])
    return field.with_arrays(**updated)
