import itertools

import numpy as np
import pytest

from grace.errors import InputError
from grace.metrics.projection import fit_pca, pca_2d
from grace.metrics.scores import ClusterSet, f1_pair, f1_sets, jc_pair, jc_sets, score_labels


def _brute_force(truth, detected):
    """Independent evaluation through indicator vectors"""
    universe = sorted(set().union(*truth, *detected))
    index = {node: i for i, node in enumerate(universe)}

    def indicator(cluster):
        vector = np.zeros(len(universe), dtype=bool)
        vector[[index[node] for node in cluster]] = True
        return vector

    T = [indicator(c) for c in truth]
    D = [indicator(c) for c in detected]

    def f1(t, d):
        common = np.count_nonzero(t & d)
        if common == 0:
            return 0.0
        precision, recall = common / np.count_nonzero(d), common / np.count_nonzero(t)
        return 2 * precision * recall / (precision + recall)

    def jc(t, d):
        return np.count_nonzero(t & d) / np.count_nonzero(t | d)

    sizes = [np.count_nonzero(d) for d in D]
    F1 = sum(size / sum(sizes) * max(f1(t, d) for t in T) for size, d in zip(sizes, D))
    JC = (
        sum(max(jc(t, d) for d in D) for t in T) / (2 * len(T))
        + sum(max(jc(t, d) for t in T) for d in D) / (2 * len(D))
    )
    return F1, JC


def test_hand_example():
    truth = [{0, 1, 2}]
    detected = [{0, 1}]
    assert f1_pair({0, 1, 2}, {0, 1}) == pytest.approx(0.8)
    assert jc_pair({0, 1, 2}, {0, 1}) == pytest.approx(2 / 3)
    assert f1_sets(truth, detected) == pytest.approx(0.8)
    assert jc_sets(truth, detected) == pytest.approx(2 / 3)


def test_identical_partitions_score_one():
    labels = [0, 0, 1, 1, 2]
    truth = ClusterSet.from_labels(labels)
    assert score_labels(truth, labels) == {"F1": 1.0, "JC": 1.0}


def test_disjoint_clusters_score_zero():
    assert f1_pair({0}, {1}) == 0.0
    assert jc_sets([{0}], [{1}]) == 0.0


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(200):
        universe = int(rng.integers(2, 12))

        def random_clusters():
            count = int(rng.integers(1, 4))
            clusters = []
            for _ in range(count):
                size = int(rng.integers(1, universe + 1))
                clusters.append(set(int(v) for v in rng.choice(universe, size=size, replace=False)))
            return clusters

        truth, detected = random_clusters(), random_clusters()
        F1, JC = _brute_force(truth, detected)
        assert abs(f1_sets(truth, detected) - F1) <= 1e-12
        assert abs(jc_sets(truth, detected) - JC) <= 1e-12


def test_empty_inputs_raise():
    with pytest.raises(InputError):
        f1_pair(set(), {1})
    with pytest.raises(InputError):
        f1_sets([], [{1}])
    with pytest.raises(InputError):
        ClusterSet.from_sets([[1], []])


def test_cluster_set_from_pairs_allows_overlap():
    clusters = ClusterSet.from_pairs([(0, 5), (1, 5), (1, 9)])
    assert clusters.clusters == [frozenset({0, 1}), frozenset({1})]
    assert clusters.ids == (5, 9)
    np.testing.assert_array_equal(clusters.membership(3), [5, 5, -1])


def test_pca_on_a_line():
    t = np.linspace(-1.0, 1.0, 9)
    X = np.column_stack([t, 2 * t, np.zeros_like(t)])
    projection = fit_pca(X)
    np.testing.assert_allclose(projection.components[:, 0], np.array([1.0, 2.0, 0.0]) / np.sqrt(5.0), atol=1e-12)
    np.testing.assert_allclose(projection.coordinates[:, 0], np.sqrt(5.0) * t, atol=1e-12)
    # Rank one after centering: second axis is zero-filled
    np.testing.assert_array_equal(projection.coordinates[:, 1], np.zeros_like(t))


def test_pca_orders_by_variance_and_centers():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 4)) * np.array([5.0, 1.0, 0.2, 2.0]) + 7.0
    coordinates = pca_2d(X)
    assert coordinates.shape == (200, 2)
    np.testing.assert_allclose(coordinates.mean(axis=0), 0.0, atol=1e-10)
    assert coordinates[:, 0].var() > coordinates[:, 1].var()


def test_pca_rejects_degenerate_shapes():
    for X in (np.zeros((1, 3)), np.zeros((5, 1))):
        with pytest.raises(InputError):
            fit_pca(X)


def test_cluster_order_does_not_matter():
    truth = [{0, 1}, {2, 3, 4}]
    detected = [{0, 1, 2}, {3, 4}]
    for permuted in itertools.permutations(detected):
        assert f1_sets(truth, list(permuted)) == pytest.approx(f1_sets(truth, detected))
