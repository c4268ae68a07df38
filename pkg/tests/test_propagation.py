import numpy as np
import pytest

from conftest import random_edges
from grace.errors import InputError, ParameterError
from grace.graph.adjacency import build_adjacency
from grace.propagation.operator import (
    PropagationVariant,
    backprop_propagation,
    build_operator,
    exact_stationary,
    inf_norm_gap,
    neumann_truncated,
    plain_power,
    power_matrix,
    propagate,
)


def test_exact_matches_dense_inverse_on_random_graphs(rng):
    for _ in range(20):
        n = int(rng.integers(1, 101))
        alpha = float(rng.uniform(0.0, 0.99))
        graph = build_adjacency(random_edges(rng, n, 3.0 / max(n, 1)), n)
        R = exact_stationary(graph.T, alpha).R
        oracle = (1 - alpha) * np.linalg.inv(np.eye(n) - alpha * graph.T.toarray())
        np.testing.assert_allclose(R, oracle, atol=1e-9)
        np.testing.assert_allclose(R.sum(axis=1), np.ones(n), atol=1e-8)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_exact_entries_are_nonnegative(rng, alpha):
    for _ in range(10):
        n = int(rng.integers(2, 101))
        graph = build_adjacency(random_edges(rng, n, 4.0 / n), n)
        R = exact_stationary(graph.T, alpha).R
        assert R.min() >= -1e-12
        np.testing.assert_allclose(R.sum(axis=1), np.ones(n), atol=1e-8)


def test_propagate_is_linear(rng, tiny_graph):
    for op in (
        exact_stationary(tiny_graph.T, 0.9),
        neumann_truncated(tiny_graph.T, 0.9, 12, materialize=False),
        plain_power(tiny_graph.T, 3),
    ):
        X = rng.normal(size=(tiny_graph.n, 3))
        Y = rng.normal(size=(tiny_graph.n, 3))
        a, b = 2.5, -0.75
        combined = propagate(op, a * X + b * Y)
        np.testing.assert_allclose(combined, a * propagate(op, X) + b * propagate(op, Y), atol=1e-10)


def test_alpha_zero_is_identity(tiny_graph):
    R = exact_stationary(tiny_graph.T, 0.0).R
    np.testing.assert_allclose(R, np.eye(tiny_graph.n))


def test_single_edge_stationary_value():
    graph = build_adjacency([(0, 1)], 2)
    R = exact_stationary(graph.T, 0.5).R
    # (1 - a)(I - a T)^-1 with T = 0.5 * ones
    np.testing.assert_allclose(R, [[0.75, 0.25], [0.25, 0.75]])


@pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
def test_alpha_out_of_range(tiny_graph, alpha):
    with pytest.raises(ParameterError):
        exact_stationary(tiny_graph.T, alpha)


def test_neumann_gap_within_bound_and_decreasing(tiny_graph):
    alpha = 0.9
    R = exact_stationary(tiny_graph.T, alpha).R
    gaps = []
    for B in range(41):
        op = neumann_truncated(tiny_graph.T, alpha, B)
        gap = inf_norm_gap(R, op.R)
        # The bound is attained, so only round-off can push the gap past it
        assert gap <= op.error_bound + 1e-12
        assert op.error_bound == pytest.approx(alpha ** (B + 1))
        gaps.append(gap)
    assert all(later <= earlier + 1e-15 for earlier, later in zip(gaps, gaps[1:]))
    assert gaps[2] > 1e-3


def test_neumann_order_zero_scales_identity(tiny_graph):
    op = neumann_truncated(tiny_graph.T, 0.9, 0)
    np.testing.assert_allclose(op.R, 0.1 * np.eye(tiny_graph.n))


def test_lazy_neumann_matches_materialized(rng, tiny_graph):
    dense = neumann_truncated(tiny_graph.T, 0.8, 15)
    lazy = neumann_truncated(tiny_graph.T, 0.8, 15, materialize=False)
    assert not lazy.materialized
    X = rng.normal(size=(tiny_graph.n, 3))
    np.testing.assert_allclose(propagate(lazy, X), propagate(dense, X), atol=1e-12)
    np.testing.assert_allclose(backprop_propagation(lazy, X), dense.R.T @ X, atol=1e-12)


def test_backprop_is_adjoint(rng, tiny_graph):
    for op in (
        exact_stationary(tiny_graph.T, 0.9),
        neumann_truncated(tiny_graph.T, 0.9, 5, materialize=False),
        plain_power(tiny_graph.T, 3),
    ):
        X = rng.normal(size=(tiny_graph.n, 2))
        G = rng.normal(size=(tiny_graph.n, 2))
        assert np.sum(G * propagate(op, X)) == pytest.approx(np.sum(backprop_propagation(op, G) * X))


def test_plain_power_matches_matrix_power(rng, tiny_graph):
    X = rng.normal(size=(tiny_graph.n, 2))
    expected = np.linalg.matrix_power(tiny_graph.T.toarray(), 4) @ X
    np.testing.assert_allclose(propagate(plain_power(tiny_graph.T, 4), X), expected)
    np.testing.assert_allclose(power_matrix(tiny_graph.T, 4) @ X, expected)


def test_propagate_rejects_wrong_rows(tiny_graph):
    op = exact_stationary(tiny_graph.T, 0.5)
    with pytest.raises(InputError):
        propagate(op, np.ones((tiny_graph.n + 1, 2)))


def test_build_operator_falls_back_above_node_limit(tiny_graph):
    op = build_operator(tiny_graph.T, "exact", 0.9, order=20, dense_node_limit=5)
    assert op.variant == PropagationVariant.NEUMANN_TRUNCATED
    assert not op.materialized
    assert build_operator(tiny_graph.T, "exact", 0.9).variant == PropagationVariant.EXACT_STATIONARY
    assert build_operator(tiny_graph.T, "power", 0.9, steps=2).steps == 2


def test_disconnected_graph_is_well_posed():
    graph = build_adjacency([(0, 1), (2, 3)], 5)
    R = exact_stationary(graph.T, 0.95).R
    np.testing.assert_allclose(R.sum(axis=1), np.ones(5), atol=1e-10)
    assert R[4, 4] == pytest.approx(1.0)
    assert abs(R[0, 2]) < 1e-15
