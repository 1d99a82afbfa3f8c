"""
Modelo del manifiesto de ejecución
Instantánea de configuración, semilla, hash de entradas, rutas de salida y tiempos
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List


def content_hash(paths):
    """sha256 del contenido de los archivos, en orden de ruta relativa"""
    digest = hashlib.sha256()
    for path in sorted(paths):
        digest.update(os.path.basename(path).encode("utf-8"))
        with open(path, "rb") as f:
            digest.update(f.read())
    return digest.hexdigest()


def dataset_files(dataset_dir):
    files = []
    for root, _, names in os.walk(dataset_dir):
        for name in names:
            files.append(os.path.join(root, name))
    return sorted(files, key=lambda p: os.path.relpath(p, dataset_dir))


@dataclass
class RunManifest:
    command: str
    seed: int
    config: Dict = field(default_factory=dict)
    input_hash: str = ""
    outputs: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    status: str = "running"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(
            command=data["command"],
            seed=data["seed"],
            config=data.get("config", {}),
            input_hash=data.get("input_hash", ""),
            outputs=list(data.get("outputs", [])),
            timings=dict(data.get("timings", {})),
            status=data.get("status", "running"),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=4, sort_keys=True)
        return path

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
