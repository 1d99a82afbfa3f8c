import csv
import json

import numpy as np
import pytest

from generators.artifact_writer import (ArtifactWriter, format_number, load_dataset, prepare_output_dir,
                                        save_dataset)
from metrics.disagreement import StudyRow
from metrics.evaluation import EvaluationSummary, ViewEvaluation
from models.errors import DatasetError, InvalidArgumentError
from models.run_manifest import RunManifest, content_hash, dataset_files


def read_csv(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        return header, list(csv.DictReader(f))


def test_dataset_round_trip(tmp_path, small_scene):
    out = tmp_path / "scene"
    save_dataset(small_scene, str(out))
    loaded = load_dataset(str(out))
    assert (loaded.n_train, loaded.n_test) == (3, 2)
    assert loaded.ground_truth_field.equals(small_scene.ground_truth_field)
    assert loaded.train_images[1].equals(small_scene.train_images[1])
    assert loaded.test_depths[0].equals(small_scene.test_depths[0])
    assert (out / "images" / "test_001.png").exists()
    info = json.loads((out / "dataset.json").read_text())
    assert info["format"] == "gemelos-dataset"


def test_load_dataset_errors(tmp_path, small_scene):
    with pytest.raises(DatasetError):
        load_dataset(str(tmp_path))
    out = tmp_path / "scene"
    save_dataset(small_scene, str(out))
    (out / "images" / "train_002.raw").unlink()
    with pytest.raises(DatasetError):
        load_dataset(str(out))


def test_prepare_output_dir(tmp_path):
    target = tmp_path / "out"
    prepare_output_dir(str(target))
    (target / "old.txt").write_text("x")
    with pytest.raises(InvalidArgumentError):
        prepare_output_dir(str(target))
    prepare_output_dir(str(target), force=True)
    assert not (target / "old.txt").exists()


def test_evaluation_csv(tmp_path):
    summary = EvaluationSummary(rows=[ViewEvaluation(0, 30.0, 0.9, float("nan")),
                                      ViewEvaluation(1, 32.0, 0.8, 0.1)], fitness=0.5, rmse=0.02)
    writer = ArtifactWriter(str(tmp_path))
    header, rows = read_csv(writer.write_evaluation(summary))
    assert header == "# gemelos evaluation v1"
    assert rows[0]["abs_error_rel"] == "nan"
    assert rows[-1]["view"] == "mean"
    assert float(rows[-1]["psnr"]) == 31.0
    assert float(rows[-1]["abs_error_rel"]) == 0.1
    _, registration = read_csv(tmp_path / "registration.csv")
    assert float(registration[0]["fitness"]) == 0.5


def test_study_csv(tmp_path):
    writer = ArtifactWriter(str(tmp_path))
    header, rows = read_csv(writer.write_study([StudyRow(0, 10.0, 0.1, 25.5, 0.2)]))
    assert header == "# gemelos study v1"
    assert rows == [{"view": "0", "percentile": "10.0", "masked_fraction": "0.1",
                     "psnr": "25.5", "abs_error_rel": "0.2"}]


def test_format_number():
    assert format_number(3) == "3"
    assert format_number(np.float64(0.1)) == "0.1"
    assert format_number(float("nan")) == "nan"
    assert format_number(True) == "1"


def test_manifest_and_hash(tmp_path, small_scene):
    out = tmp_path / "scene"
    save_dataset(small_scene, str(out))
    first = content_hash(dataset_files(str(out)))
    assert first == content_hash(dataset_files(str(out)))
    (out / "dataset.json").write_text((out / "dataset.json").read_text() + " ")
    assert content_hash(dataset_files(str(out))) != first

    manifest = RunManifest(command="train", seed=1, config={"iterations": 10}, input_hash=first)
    path = manifest.save(str(tmp_path / "manifest.json"))
    again = RunManifest.load(path)
    assert again == manifest
    assert again.status == "running"
