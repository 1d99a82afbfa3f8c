"""
Módulo de configuración de entrenamiento
Todas las constantes del calendario, tasas de aprendizaje y pesos de las pérdidas
"""

from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Tuple

from models.errors import InvalidArgumentError
from training.optimizer import exponential_lr

MODES = ("baseline", "copruning", "pseudoview", "corgs")


@dataclass(frozen=True)
class CoregHooks:
    """Interruptores de los mecanismos de co-regularización"""
    co_pruning: bool = False
    pseudo_view: bool = False
    depth_pearson: bool = False

    @property
    def any(self):
        return self.co_pruning or self.pseudo_view or self.depth_pearson


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 3000
    position_lr_init: float = 1.6e-4
    position_lr_final: float = 1.6e-6
    scale_lr: float = 5e-3
    rotation_lr: float = 1e-3
    opacity_lr: float = 5e-2
    color_lr: float = 2.5e-3
    densify_from: int = 100
    densify_until: Optional[int] = None
    densify_every: int = 100
    densify_grad_threshold: float = 2e-4
    percent_dense: float = 0.01
    opacity_reset_every: int = 1000
    prune_opacity_threshold: float = 0.005
    coprune_every_k_interleaves: int = 5
    coprune_from: int = 0
    pseudo_view_from: Optional[int] = None
    tau: Optional[float] = None
    tau_rel: float = 0.05
    lambda_dssim: float = 0.2
    lambda_pseudo: float = 1.0
    lambda_depth: float = 0.0
    pseudo_noise_scale: float = 0.05
    n_fields: int = 2
    seed: int = 0
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    init_points: int = 100
    init_opacity: float = 0.1
    init_color: float = 0.5
    shared_field_streams: bool = False
    log_every: int = 100
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "background", tuple(float(v) for v in self.background))
        if self.densify_until is None:
            object.__setattr__(self, "densify_until", int(0.6 * self.iterations))

    def validate(self):
        """Verifica las invariantes; lanza InvalidArgumentError con la primera violación"""
        for name in ("iterations", "densify_every", "opacity_reset_every", "coprune_every_k_interleaves",
                     "log_every", "n_fields", "threads", "init_points"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} debe ser ≥ 1")
        if self.densify_from < 0 or self.densify_until < 0:
            raise InvalidArgumentError("densify_from y densify_until no pueden ser negativos")
        if self.coprune_from < 0 or (self.pseudo_view_from is not None and self.pseudo_view_from < 0):
            raise InvalidArgumentError("coprune_from y pseudo_view_from no pueden ser negativos")
        if not 0.0 <= self.lambda_dssim <= 1.0:
            raise InvalidArgumentError("lambda_dssim debe estar en [0, 1]")
        if self.tau is not None and not self.tau > 0:
            raise InvalidArgumentError("tau debe ser positivo")
        if not self.tau_rel > 0:
            raise InvalidArgumentError("tau_rel debe ser positivo")
        for name in ("position_lr_init", "position_lr_final", "scale_lr", "rotation_lr", "opacity_lr", "color_lr"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} debe ser positivo")
        for name in ("lambda_pseudo", "lambda_depth", "pseudo_noise_scale", "densify_grad_threshold",
                     "percent_dense", "prune_opacity_threshold"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} no puede ser negativo")
        if not (0.0 < self.init_opacity < 1.0 and 0.0 < self.init_color < 1.0):
            raise InvalidArgumentError("init_opacity e init_color deben estar en (0, 1)")
        if len(self.background) != 3 or not all(0.0 <= v <= 1.0 for v in self.background):
            raise InvalidArgumentError("background debe ser un color RGB en [0, 1]")
        return self

    def with_overrides(self, **changes):
        """Copia con cambios; densify_until se recalcula si cambian las iteraciones y no se fija"""
        if "iterations" in changes and "densify_until" not in changes:
            changes["densify_until"] = None
        return replace(self, **changes)

    def hooks_for_mode(self, mode):
        """Interruptores de cada fila de la ablación"""
        if mode not in MODES:
            raise InvalidArgumentError(f"modo desconocido '{mode}', opciones: {', '.join(MODES)}")
        pseudo = mode in ("pseudoview", "corgs")
        return CoregHooks(
            co_pruning=mode in ("copruning", "corgs"),
            pseudo_view=pseudo,
            depth_pearson=pseudo and self.lambda_depth > 0,
        )

    def learning_rates(self, iteration, spatial_scale=1.0):
        return {
            "positions": exponential_lr(iteration, self.position_lr_init, self.position_lr_final,
                                        self.iterations) * spatial_scale,
            "log_scales": self.scale_lr,
            "rotations": self.rotation_lr,
            "opacity_logits": self.opacity_lr,
            "color_logits": self.color_lr,
        }

    def is_densify_iteration(self, iteration):
        return (
            self.densify_from < iteration <= self.densify_until
            and iteration % self.densify_every == 0
        )

    def densify_iterations(self):
        return [it for it in range(1, self.iterations + 1) if self.is_densify_iteration(it)]

    def first_densify_iteration(self):
        events = self.densify_iterations()
        return events[0] if events else None

    def last_densify_iteration(self):
        events = self.densify_iterations()
        return events[-1] if events else None

    def pseudo_view_start(self):
        """Primera iteración con vistas virtuales; por defecto la primera densificación"""
        if self.pseudo_view_from is not None:
            return self.pseudo_view_from
        return self.first_densify_iteration()

    def is_coprune_iteration(self, iteration, densify_count):
        """Co-poda cada k eventos de densificación, a partir de coprune_from"""
        return (
            self.is_densify_iteration(iteration)
            and iteration >= self.coprune_from
            and densify_count % self.coprune_every_k_interleaves == 0
        )

    def is_opacity_reset(self, iteration):
        return iteration % self.opacity_reset_every == 0 and iteration <= self.densify_until

    def resolve_tau(self, scene_diagonal):
        """tau absoluto si se fijó; si no, tau_rel × diagonal de la caja de la escena"""
        if self.tau is not None:
            return float(self.tau)
        return self.tau_rel * max(float(scene_diagonal), 1e-9)

    def to_dict(self):
        data = asdict(self)
        data["background"] = list(self.background)
        return data

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"claves desconocidas: {', '.join(sorted(unknown))}")
        return cls(**data)
