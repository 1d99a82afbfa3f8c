"""
Módulo de configuración de ejecución
Carga y guarda la configuración de entrenamiento en un archivo de texto plano clave=valor
"""

import logging
import os
from dataclasses import fields

from config.train_config import TrainConfig
from models.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

OPTIONAL_TYPES = {"densify_until": int, "tau": float, "pseudo_view_from": int}


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "si", "sí"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise ValueError(f"booleano inválido: {text}")


def _parse_triple(text):
    parts = [float(part) for part in text.replace(";", ",").split(",")]
    if len(parts) != 3:
        raise ValueError("se esperaban tres valores separados por comas")
    return tuple(parts)


def parse_value(key, text, default):
    """Convierte el texto según el tipo del valor por defecto"""
    if key in OPTIONAL_TYPES:
        if text.strip().lower() in ("", "none"):
            return None
        return OPTIONAL_TYPES[key](text)
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return _parse_triple(text)
    return text


def format_value(value):
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value).lower() if isinstance(value, bool) else str(value)


class RunConfig:
    """Valores de TrainConfig leídos de archivo; las banderas de la CLI se aplican encima"""

    def __init__(self, config_file=None):
        self.config_file = config_file
        self.config = self.load_config()

    def get_default_config(self):
        """Retorna la configuración por defecto como diccionario"""
        defaults = TrainConfig()
        return {f.name: (None if f.name in OPTIONAL_TYPES else getattr(defaults, f.name)) for f in fields(TrainConfig)}

    def load_config(self):
        """Defaults sobrescritos por las claves del archivo, si existe"""
        config = self.get_default_config()
        if not self.config_file:
            return config
        if not os.path.exists(self.config_file):
            raise InvalidArgumentError(f"no existe el archivo de configuración {self.config_file}")
        defaults = TrainConfig()
        with open(self.config_file, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InvalidArgumentError(f"{self.config_file}:{number}: se esperaba clave=valor")
                key, text = (part.strip() for part in line.split("=", 1))
                if key not in config:
                    raise InvalidArgumentError(f"{self.config_file}:{number}: clave desconocida '{key}'")
                try:
                    config[key] = parse_value(key, text, getattr(defaults, key))
                except ValueError as e:
                    raise InvalidArgumentError(f"{self.config_file}:{number}: valor inválido para '{key}': {e}")
        logger.debug(f"configuración cargada de {self.config_file}")
        return config

    def save_config(self, path=None):
        """Guarda la configuración actual en formato clave=valor"""
        path = path or self.config_file
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for key, value in self.config.items():
                f.write(f"{key}={format_value(value)}\n")
        return path

    def apply(self, **overrides):
        """Aplica las banderas de la línea de comandos (ignora los valores None)"""
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in self.config:
                raise InvalidArgumentError(f"clave desconocida '{key}'")
            self.config[key] = value
        return self

    def train_config(self):
        """TrainConfig validado con la precedencia defaults < archivo < banderas"""
        return TrainConfig.from_dict(dict(self.config)).validate()
