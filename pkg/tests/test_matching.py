import numpy as np
import pytest

from conftest import point_field as points, random_field
from coregularization.matching import MatchResult, knn_match, nonmatching_mask
from models.errors import InvalidArgumentError
from models.gaussian_field import GaussianField


def test_single_nearest_neighbor():
    match = knn_match(points([[0, 0, 0]]), points([[1, 0, 0], [3, 0, 0]]))
    assert match.indices[0] == 0
    assert match.distances[0] == pytest.approx(1.0)


def test_self_match_is_at_distance_zero():
    field = random_field(np.random.default_rng(0), 40, depth_strata=False)
    match = knn_match(field, field)
    assert np.all(match.distances == 0.0)
    assert np.array_equal(match.indices, np.arange(40))


def test_matches_brute_force():
    rng = np.random.default_rng(1)
    source = rng.normal(size=(500, 3))
    target = rng.normal(size=(300, 3))
    match = knn_match(source, target, workers=2)
    pairwise = np.linalg.norm(source[:, None, :] - target[None, :, :], axis=2)
    assert np.allclose(match.distances, pairwise.min(axis=1))
    assert np.allclose(pairwise[np.arange(500), match.indices], match.distances)


def test_empty_target_is_all_nonmatching():
    match = knn_match(points([[0, 0, 0], [1, 1, 1]]), GaussianField.empty())
    assert np.all(np.isinf(match.distances))
    assert np.all(match.indices == -1)
    assert match.nonmatching.all()
    assert nonmatching_mask(match, 5.0).all()


def test_threshold_is_strict():
    match = MatchResult(np.zeros(3, dtype=np.int64), np.array([0.1, 4.9, 5.1]), np.zeros(3, dtype=bool))
    assert list(nonmatching_mask(match, 5.0)) == [False, False, True]
    exact = MatchResult(np.zeros(2, dtype=np.int64), np.array([5.0, 0.0]), np.zeros(2, dtype=bool))
    assert not nonmatching_mask(exact, 5.0).any()


def test_mask_shrinks_as_tau_grows():
    rng = np.random.default_rng(2)
    match = knn_match(rng.uniform(-20, 20, size=(200, 3)), rng.uniform(-20, 20, size=(50, 3)))
    counts = [int(nonmatching_mask(match, tau).sum()) for tau in (3, 5, 10, 30)]
    assert counts == sorted(counts, reverse=True)


def test_non_positive_tau_rejected():
    match = knn_match(points([[0, 0, 0]]), points([[1, 0, 0]]))
    with pytest.raises(InvalidArgumentError):
        nonmatching_mask(match, 0.0)
