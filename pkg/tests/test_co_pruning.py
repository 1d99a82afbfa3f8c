import logging

import numpy as np
import pytest

from conftest import point_field as points
from coregularization.co_pruning import co_prune, coprune_masks
from models.errors import InvalidArgumentError
from training.optimizer import OptimizerState


def brute_force_mask(source, target, tau):
    if target.count == 0:
        return np.ones(source.count, dtype=bool)
    pairwise = np.linalg.norm(source.positions[:, None, :] - target.positions[None, :, :], axis=2)
    return pairwise.min(axis=1) > tau


def test_degenerate_scene_guard(caplog):
    a, b = points([[0, 0, 0]]), points([[10, 0, 0]])
    with caplog.at_level(logging.WARNING):
        (pa, pb), report = co_prune([a, b], tau=5.0)
    assert pa.count == 1 and pb.count == 1
    assert report.n_pruned == [0, 0]
    assert report.guard_fired
    assert len(report.warnings) == 2
    assert "vaciaría" in caplog.text


def test_identical_fields_prune_nothing():
    field = points(np.random.default_rng(0).normal(size=(30, 3)))
    pruned, report = co_prune([field, field], tau=0.01)
    assert report.n_pruned == [0, 0]
    assert pruned[0].equals(field)


def test_outlier_is_the_only_pruned_primitive():
    cluster = np.random.default_rng(1).normal(scale=0.2, size=(20, 3))
    with_outlier = points(np.vstack([cluster, [[100.0, 0.0, 0.0]]]))
    plain = points(cluster)
    states = [OptimizerState.for_field(with_outlier), OptimizerState.for_field(plain)]
    (a, b), report = co_prune([with_outlier, plain], states, tau=0.5)
    assert report.n_pruned == [1, 0]
    assert a.count == 20 and b.count == 20
    assert np.allclose(a.positions, cluster)
    assert not report.guard_fired
    states[0].check_rows(a)
    states[1].check_rows(b)


def test_matches_brute_force_and_postcondition():
    rng = np.random.default_rng(2)
    for _ in range(50):
        tau = rng.uniform(0.2, 1.0)
        a = points(rng.uniform(-2, 2, size=(rng.integers(5, 40), 3)))
        b = points(rng.uniform(-2, 2, size=(rng.integers(5, 40), 3)))
        masks = coprune_masks([a, b], tau)
        assert np.array_equal(masks[0], brute_force_mask(a, b, tau))
        assert np.array_equal(masks[1], brute_force_mask(b, a, tau))
        (pa, pb), report = co_prune([a, b], tau=tau)
        if report.guard_fired:
            continue
        # lo que queda tiene correspondencia en la instantánea del otro campo
        assert not brute_force_mask(pa, b, tau).any()
        assert not brute_force_mask(pb, a, tau).any()
        # el orden de los campos no cambia el resultado
        (qb, qa), _ = co_prune([b, a], tau=tau)
        assert qa.equals(pa) and qb.equals(pb)


def test_three_fields():
    core = np.zeros((3, 3)) + np.arange(3)[:, None] * 0.1
    a = points(core)
    b = points(np.vstack([core, [[5.0, 0.0, 0.0]]]))
    c = points(np.vstack([core, [[-5.0, 0.0, 0.0]]]))
    _, report = co_prune([a, b, c], tau=0.5)
    assert report.n_pruned == [0, 1, 1]


def test_invalid_arguments():
    field = points([[0, 0, 0]])
    with pytest.raises(InvalidArgumentError):
        co_prune([field], tau=1.0)
    with pytest.raises(InvalidArgumentError):
        co_prune([field, field], tau=0.0)
