"""
Correspondencias entre campos por vecino más cercano
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from models.errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Para cada primitiva del campo origen: índice en el destino, distancia y bandera"""
    indices: np.ndarray
    distances: np.ndarray
    nonmatching: np.ndarray

    @property
    def count(self):
        return self.indices.shape[0]


def knn_match(source, target, tau=None, workers=1):
    """
    1-NN exacto de cada posición de `source` en `target`

    Args:
        source, target: GaussianField o arreglos (N, 3)
        tau: si se da, marca como no coincidentes las distancias > tau
        workers: hilos de cKDTree.query

    Returns:
        MatchResult; con destino vacío, distancias infinitas, índice -1 y todo no coincidente
    """
    src = _positions(source)
    dst = _positions(target)
    n = src.shape[0]
    if dst.shape[0] == 0:
        return MatchResult(
            indices=np.full(n, -1, dtype=np.int64),
            distances=np.full(n, np.inf),
            nonmatching=np.ones(n, dtype=bool),
        )
    if n == 0:
        return MatchResult(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0, dtype=bool))
    tree = cKDTree(dst)
    distances, indices = tree.query(src, k=1, workers=workers)
    distances = np.asarray(distances, dtype=np.float64)
    nonmatching = distances > tau if tau is not None else np.zeros(n, dtype=bool)
    return MatchResult(indices=np.asarray(indices, dtype=np.int64), distances=distances, nonmatching=nonmatching)


def nonmatching_mask(match, tau):
    """M_i = 1 si la distancia a su correspondencia supera tau (desigualdad estricta)"""
    if not tau > 0:
        raise InvalidArgumentError("tau debe ser positivo")
    return match.distances > tau


def _positions(item):
    positions = getattr(item, "positions", item)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    return positions
