import logging

import numpy as np
import pytest

from coregularization.pseudo_views import average_rotation, nearest_camera, sample_pseudo_view
from models.camera import Camera
from models.errors import InvalidArgumentError


def camera_at(center, rotation=(1.0, 0.0, 0.0, 0.0)):
    rotation = np.asarray(rotation, dtype=np.float64)
    probe = Camera(32, 32, 16, 16, 32, 32, rotation, (0, 0, 0))
    return probe.with_pose(rotation, -probe.rotation_matrix @ np.asarray(center, dtype=np.float64))


def about_y(degrees):
    half = np.radians(degrees) / 2
    return np.array([np.cos(half), 0.0, np.sin(half), 0.0])


def test_midpoint_without_noise():
    cameras = [camera_at((0, 0, 0)), camera_at((2, 0, 0))]
    view = sample_pseudo_view(cameras, np.random.default_rng(0), noise_scale=0.0)
    assert np.allclose(view.camera.center, [1.0, 0.0, 0.0])
    assert sorted(view.parents) == [0, 1]


def test_identical_rotations_are_kept():
    q = about_y(30)
    cameras = [camera_at((0, 0, 0), q), camera_at((2, 0, 0), q)]
    view = sample_pseudo_view(cameras, np.random.default_rng(1), noise_scale=0.0)
    assert np.allclose(view.camera.rotation_matrix, camera_at((0, 0, 0), q).rotation_matrix)


def test_slerp_halfway():
    result = average_rotation(about_y(0), about_y(90))
    assert np.allclose(result, about_y(45)) or np.allclose(result, -about_y(45))


def test_noise_scales_with_parent_distance():
    cameras = [camera_at((0, 0, 0)), camera_at((10, 0, 0))]
    offsets = [
        sample_pseudo_view(cameras, np.random.default_rng(seed), noise_scale=0.05).camera.center - [5, 0, 0]
        for seed in range(400)
    ]
    assert np.std(np.asarray(offsets)) == pytest.approx(0.5, rel=0.15)


def test_parent_is_nearest_neighbor():
    centers = np.array([[0, 0, 0], [1, 0, 0], [5, 0, 0], [-1, 0, 0]], dtype=np.float64)
    assert nearest_camera(centers, 2) == (1, 4.0)
    # empate entre 1 y 3: gana el índice menor
    assert nearest_camera(centers, 0)[0] == 1


def test_coincident_centers_fall_back_to_first_rotation(caplog):
    cameras = [camera_at((1, 1, 1), about_y(10)), camera_at((1, 1, 1), about_y(70))]
    with caplog.at_level(logging.WARNING):
        view = sample_pseudo_view(cameras, np.random.default_rng(3), noise_scale=0.05)
    first = view.parents[0]
    assert np.allclose(view.camera.rotation, cameras[first].rotation)
    assert "coinciden" in caplog.text
    assert np.all(np.isfinite(view.camera.center))


def test_deterministic_for_seed():
    cameras = [camera_at((0, 0, 0)), camera_at((2, 0, 0), about_y(20)), camera_at((5, 1, 0))]
    a = sample_pseudo_view(cameras, np.random.default_rng(9))
    b = sample_pseudo_view(cameras, np.random.default_rng(9))
    assert np.array_equal(a.camera.translation, b.camera.translation)
    assert a.parents == b.parents


def test_needs_two_cameras():
    with pytest.raises(InvalidArgumentError):
        sample_pseudo_view([camera_at((0, 0, 0))], np.random.default_rng(0))
