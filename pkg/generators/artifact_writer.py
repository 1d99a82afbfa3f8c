"""
Escritura y lectura de artefactos en disco
Datasets, campos entrenados y reportes CSV con cabecera de esquema versionada
"""

import csv
import json
import logging
import os
import shutil

from models.errors import DatasetError, InvalidArgumentError
from models.field_io import (load_cameras, load_field, load_image_raw, save_cameras, save_field,
                             save_image_raw, save_png)
from models.scene_dataset import SceneDataset

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DATASET_FORMAT = "gemelos-dataset"


def prepare_output_dir(path, force=False):
    """Crea el directorio de salida; si ya existe y no está vacío exige force"""
    if os.path.exists(path) and os.listdir(path):
        if not force:
            raise InvalidArgumentError(f"{path} ya existe; use --force para sobrescribir")
        shutil.rmtree(path)
    os.makedirs(path, exist_ok=True)
    return path


def format_number(value):
    """Representación estable de un número para CSV"""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if value != value:
        return "nan"
    return repr(value)


class ArtifactWriter:
    def __init__(self, output_dir):
        self.output_dir = output_dir
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, *parts):
        return os.path.join(self.output_dir, *parts)

    def write_csv(self, name, schema, columns, rows):
        """CSV con la línea de comentario '# gemelos <schema> v1' antes de la cabecera"""
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# gemelos {schema} v{SCHEMA_VERSION}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_number(row[c]) if not isinstance(row[c], str) else row[c] for c in columns])
        return path

    def write_training_log(self, log):
        return self.write_csv("training_log.csv", "training_log", log.columns, log.rows)

    def write_events(self, log):
        """Eventos de densificación y co-poda, una fila por campo y evento"""
        columns = ["iteration", "event", "field", "n_cloned", "n_split", "n_pruned", "warning"]
        rows = []
        for it, k, report in log.densify_events:
            rows.append({"iteration": it, "event": "densify", "field": k, "n_cloned": report.n_cloned,
                         "n_split": report.n_split, "n_pruned": report.n_pruned, "warning": ""})
        for it, report in log.coprune_events:
            for k, removed in enumerate(report.n_pruned):
                rows.append({"iteration": it, "event": "coprune", "field": k, "n_cloned": 0, "n_split": 0,
                             "n_pruned": removed, "warning": "; ".join(report.warnings)})
        rows.sort(key=lambda r: (r["iteration"], r["event"] != "densify", r["field"]))
        return self.write_csv("events.csv", "events", columns, rows)

    def write_evaluation(self, summary, name="evaluation.csv"):
        columns = ["view", "psnr", "ssim", "abs_error_rel"]
        rows = [{"view": r.view, "psnr": r.psnr, "ssim": r.ssim, "abs_error_rel": r.abs_error_rel}
                for r in summary.rows]
        rows.append({"view": "mean", "psnr": summary.mean_psnr, "ssim": summary.mean_ssim,
                     "abs_error_rel": summary.mean_abs_error_rel})
        path = self.write_csv(name, "evaluation", columns, rows)
        if summary.fitness is not None:
            self.write_csv("registration.csv", "registration", ["fitness", "rmse"],
                           [{"fitness": summary.fitness, "rmse": summary.rmse}])
        return path

    def write_study(self, rows, name="study.csv"):
        columns = ["view", "percentile", "masked_fraction", "psnr", "abs_error_rel"]
        data = [{"view": r.view, "percentile": r.percentile, "masked_fraction": r.masked_fraction,
                 "psnr": r.psnr, "abs_error_rel": r.abs_error_rel} for r in rows]
        return self.write_csv(name, "study", columns, data)

    def write_fields(self, fields):
        return [save_field(f, self.path(f"field_{k}.bin"), name=f"field_{k}") for k, f in enumerate(fields)]


def save_dataset(dataset, out_dir):
    """Escribe el dataset con el diseño cameras.json, images/, depths/, alphas/, gt_field.bin"""
    writer = ArtifactWriter(out_dir)
    save_cameras({"train": dataset.train_cameras, "test": dataset.test_cameras}, writer.path("cameras.json"))
    for split, images in (("train", dataset.train_images), ("test", dataset.test_images)):
        for index, image in enumerate(images):
            save_image_raw(image, writer.path("images", f"{split}_{index:03d}.raw"))
            save_png(image, writer.path("images", f"{split}_{index:03d}.png"))
    for folder, images in (("depths", dataset.test_depths), ("alphas", dataset.test_alphas)):
        for index, image in enumerate(images or []):
            save_image_raw(image, writer.path(folder, f"test_{index:03d}.raw"))
    if dataset.ground_truth_field is not None:
        save_field(dataset.ground_truth_field, writer.path("gt_field.bin"), name="ground_truth")
    info = {
        "format": DATASET_FORMAT,
        "version": SCHEMA_VERSION,
        "background": list(dataset.background),
        "n_train": dataset.n_train,
        "n_test": dataset.n_test,
    }
    with open(writer.path("dataset.json"), "w", encoding="utf-8") as f:
        json.dump(info, f, indent=4, sort_keys=True)
    return out_dir


def load_dataset(path):
    """Lee un directorio escrito por save_dataset"""
    info_path = os.path.join(path, "dataset.json")
    cameras_path = os.path.join(path, "cameras.json")
    if not (os.path.isfile(info_path) and os.path.isfile(cameras_path)):
        raise DatasetError(f"{path} no es un dataset (faltan dataset.json o cameras.json)")
    try:
        with open(info_path, "r", encoding="utf-8") as f:
            info = json.load(f)
        cameras = load_cameras(cameras_path)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"metadatos del dataset inválidos: {e}")
    if info.get("format") != DATASET_FORMAT or info.get("version") != SCHEMA_VERSION:
        raise DatasetError(f"{info_path}: formato o versión no soportados")

    def images(folder, split, count, required=True):
        paths = [os.path.join(path, folder, f"{split}_{index:03d}.raw") for index in range(count)]
        if not all(os.path.isfile(p) for p in paths):
            if required:
                raise DatasetError(f"faltan imágenes en {os.path.join(path, folder)}")
            return None
        return [load_image_raw(p) for p in paths]

    train_cameras = cameras.get("train", [])
    test_cameras = cameras.get("test", [])
    gt_path = os.path.join(path, "gt_field.bin")
    try:
        return SceneDataset(
            train_cameras=train_cameras,
            test_cameras=test_cameras,
            train_images=images("images", "train", len(train_cameras)),
            test_images=images("images", "test", len(test_cameras)),
            test_depths=images("depths", "test", len(test_cameras), required=False),
            test_alphas=images("alphas", "test", len(test_cameras), required=False),
            ground_truth_field=load_field(gt_path) if os.path.isfile(gt_path) else None,
            background=tuple(info.get("background", (0.0, 0.0, 0.0))),
        )
    except InvalidArgumentError as e:
        raise DatasetError(f"dataset inconsistente: {e}")
