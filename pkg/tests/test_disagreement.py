import numpy as np
import pytest

from conftest import axis_camera, random_field
from metrics.disagreement import (StudyRow, color_disagreement_score, curve_trend, disagreement_study,
                                  masked_quality_curve, measure_disagreement)
from metrics.image_metrics import PSNR_CAP
from models.errors import InvalidArgumentError


def test_hand_built_four_pixel_curve():
    render = np.zeros((2, 2, 1))
    gt = np.array([0.1, 0.2, 0.3, 0.4]).reshape(2, 2, 1)
    score = np.array([[0.4, 0.3], [0.2, 0.1]])
    curve = masked_quality_curve(render, gt, score, [0, 25, 50, 75])
    expected_mse = [0.075, 0.29 / 3, 0.125, 0.16]
    assert [p.masked for p in curve] == [0, 1, 2, 3]
    for point, mse in zip(curve, expected_mse):
        assert point.psnr == pytest.approx(-10 * np.log10(mse))


def test_curve_with_depth_error():
    render = np.zeros((2, 2, 1))
    score = np.array([[0.0, 1.0], [0.0, 0.0]])
    pred_depth = np.array([[1.0, 3.0], [1.0, 1.0]])
    gt_depth = np.ones((2, 2))
    curve = masked_quality_curve(render, render, score, [0, 25, 50], pred_depth, gt_depth)
    assert curve[0].abs_error_rel == pytest.approx(0.5)
    assert curve[1].abs_error_rel == 0.0
    # solo un candidato con puntaje > 0
    assert curve[2].masked == 1


def test_identical_fields_give_flat_curve():
    field = random_field(np.random.default_rng(0), 15)
    camera = axis_camera(16)
    gt = np.random.default_rng(1).uniform(size=(16, 16, 3))
    rows = disagreement_study(field, field, [gt], [camera], [0, 30, 60, 90])
    assert len({row.psnr for row in rows}) == 1
    assert all(row.masked_fraction == 0.0 for row in rows)
    assert curve_trend(rows) == 0.0


def test_percentile_100_is_rejected():
    with pytest.raises(InvalidArgumentError):
        masked_quality_curve(np.zeros((2, 2, 1)), np.zeros((2, 2, 1)), np.ones((2, 2)), [100])


def test_study_depth_kind_runs():
    rng = np.random.default_rng(2)
    a, b = random_field(rng, 10), random_field(rng, 10)
    camera = axis_camera(16)
    gt = rng.uniform(size=(16, 16, 3))
    gt_depth = np.full((16, 16), 4.0)
    rows = disagreement_study(a, b, [gt], [camera], [0, 50], gt_depths=[gt_depth], kind="depth")
    assert [row.percentile for row in rows] == [0.0, 50.0]
    with pytest.raises(InvalidArgumentError):
        disagreement_study(a, b, [gt], [camera], [0], kind="normals")


def test_measure_disagreement_between_identical_fields():
    field = random_field(np.random.default_rng(3), 12)
    report = measure_disagreement(field, field, [axis_camera(16), axis_camera(16, 5.0)], tau=0.1)
    assert report.fitness == 1.0 and report.rmse == 0.0
    assert report.psnr_between == [PSNR_CAP, PSNR_CAP]
    assert report.view_ids == [0, 1]


def test_color_score_and_trend():
    a = np.zeros((2, 2, 3))
    b = a.copy()
    b[0, 0] = [0.3, 0.0, 0.0]
    assert color_disagreement_score(a, b)[0, 0] == pytest.approx(0.1)
    rows = [StudyRow(0, p, p / 100, 20 + p, 0.0) for p in (0, 10, 20)]
    assert curve_trend(rows) == pytest.approx(1.0)
