"""
Co-poda: elimina las primitivas sin correspondencia a distancia ≤ tau en algún otro campo
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from coregularization.matching import knn_match, nonmatching_mask
from models.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass
class CoPruneReport:
    n_pruned: List[int] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def guard_fired(self):
        return bool(self.warnings)


def coprune_masks(fields, tau):
    """Máscaras de no coincidencia de cada campo contra todos los demás, sobre instantáneas"""
    masks = []
    for k, source in enumerate(fields):
        mask = np.zeros(source.count, dtype=bool)
        for other, target in enumerate(fields):
            if other != k:
                mask |= nonmatching_mask(knn_match(source, target), tau)
        masks.append(mask)
    return masks


def co_prune(fields, optimizer_states=None, tau=None):
    """
    Poda simultánea de N campos

    Las máscaras se calculan todas antes de eliminar nada. Un campo que quedaría
    vacío no se poda y se registra una advertencia.

    Args:
        fields: lista de GaussianField (≥ 2)
        optimizer_states: lista de OptimizerState o None; sus filas se ajustan en sitio
        tau: distancia máxima permitida

    Returns:
        (lista de campos podados, CoPruneReport)
    """
    if len(fields) < 2:
        raise InvalidArgumentError("la co-poda requiere al menos dos campos")
    if tau is None or not tau > 0:
        raise InvalidArgumentError("tau debe ser positivo")
    masks = coprune_masks(fields, tau)
    report = CoPruneReport()
    pruned = []
    for k, (current, mask) in enumerate(zip(fields, masks)):
        if current.count > 0 and mask.all():
            message = f"la co-poda vaciaría el campo {k} ({current.count} primitivas); se omite"
            logger.warning(message)
            report.warnings.append(message)
            mask = np.zeros_like(mask)
        report.n_pruned.append(int(mask.sum()))
        if mask.any():
            current = current.take(~mask)
            if optimizer_states is not None:
                optimizer_states[k].keep(~mask)
        pruned.append(current)
    return pruned, report
