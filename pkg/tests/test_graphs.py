import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectrace.graphs import (
    WeightedDigraph,
    diffusion_operator,
    knn_sphere_graph,
    laplacian,
    random_digraph,
    random_walk_system,
    read_edge_list,
    ring_graph,
    ring_transition_eigenvalues,
    transition_matrix,
    write_edge_list,
)
from spectrace.recoverability import cluster_eigenvalues
from spectrace.systems import simulate_discrete

C4 = np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]], dtype=float)


class TestGenerators:
    @pytest.mark.parametrize("seed", [0, 1, 99])
    def test_two_vertex_digraph(self, seed):
        np.testing.assert_array_equal(random_digraph(2, 2, seed).W, [[0, 1], [1, 0]])

    def test_digraph_cardinality(self):
        W = random_digraph(20, 80, seed=7).W
        assert np.count_nonzero(W) == 80
        assert not np.any(np.diag(W))
        assert set(np.unique(W)) == {0.0, 1.0}

    def test_digraph_deterministic(self):
        np.testing.assert_array_equal(random_digraph(20, 80, 3).W, random_digraph(20, 80, 3).W)

    def test_digraph_too_many_edges(self):
        with pytest.raises(ValueError):
            random_digraph(3, 7, 0)

    def test_ring_c4(self):
        np.testing.assert_array_equal(ring_graph(4, 2).W, C4)

    def test_ring_degree(self):
        g = ring_graph(30, 8)
        np.testing.assert_array_equal(g.W.sum(axis=1), 8)
        assert g.undirected
        # circulant: every row is a cyclic shift of the first
        for i in range(30):
            np.testing.assert_array_equal(g.W[i], np.roll(g.W[0], i))

    @pytest.mark.parametrize("d,k", [(4, 4), (5, 3), (6, 0)])
    def test_ring_bad_k(self, d, k):
        with pytest.raises(ValueError):
            ring_graph(d, k)

    def test_sphere_k4(self):
        W = knn_sphere_graph(4, 3, seed=1).W
        np.testing.assert_array_equal(W, np.ones((4, 4)) - np.eye(4))

    def test_sphere_connected_and_spectrum(self):
        g = knn_sphere_graph(150, 10, seed=0)
        assert g.undirected
        assert np.all(g.W.sum(axis=1) >= 10)
        Lm = laplacian(g).matrix
        np.testing.assert_allclose(Lm, Lm.T, atol=1e-15)
        ev = np.linalg.eigvalsh(Lm)
        assert ev[0] > -1e-12 and ev[-1] < 2 + 1e-12
        # connected <=> eigenvalue 0 of the normalized Laplacian is simple
        assert np.sum(np.abs(ev) < 1e-9) == 1

    def test_sphere_deterministic(self):
        np.testing.assert_array_equal(knn_sphere_graph(50, 5, 4).W, knn_sphere_graph(50, 5, 4).W)


class TestOperators:
    def test_c4_transition(self):
        P = transition_matrix(WeightedDigraph(C4)).matrix
        np.testing.assert_array_equal(P, C4 / 2)

    def test_isolated_vertex(self):
        W = np.zeros((4, 4))
        W[0, 1] = W[1, 0] = W[1, 3] = W[3, 1] = 1
        g = WeightedDigraph(W)
        P = transition_matrix(g).matrix
        np.testing.assert_array_equal(P[2], [0, 0, 1, 0])
        Ad = diffusion_operator(g).matrix
        assert not np.any(Ad[2]) and not np.any(Ad[:, 2])

    def test_k2(self):
        g = WeightedDigraph([[0, 1], [1, 0]])
        np.testing.assert_array_equal(diffusion_operator(g).matrix, [[0, 1], [1, 0]])
        np.testing.assert_allclose(np.linalg.eigvalsh(laplacian(g).matrix), [0, 2], atol=1e-15)

    def test_ring_laplacian_matches_circulant_formula(self):
        # regular graph: L = I - P, so its spectrum is 1 - (circulant eigenvalues)
        dense = np.sort(np.linalg.eigvalsh(laplacian(ring_graph(30, 8)).matrix))
        formula = np.sort(1 - ring_transition_eigenvalues(30, 8))
        np.testing.assert_allclose(dense, formula, atol=1e-10)

    def test_ring_13_distinct(self):
        P = transition_matrix(ring_graph(30, 8)).matrix
        ev = np.linalg.eigvalsh(P)
        labels, n = cluster_eigenvalues(ev, tol=1e-9)
        assert n == 13
        # the stationary eigenvalue 1 is simple
        assert np.bincount(labels)[labels[np.argmax(ev)]] == 1

    @given(st.integers(2, 25), st.integers(0, 2**32 - 1), st.floats(0.05, 0.9))
    @settings(max_examples=40, deadline=None)
    def test_row_stochastic(self, d, seed, frac):
        m = max(1, int(frac * d * (d - 1)))
        P = transition_matrix(random_digraph(d, m, seed)).matrix
        assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-14

    @pytest.mark.parametrize("d,k", [(8, 2), (12, 4), (30, 8), (31, 6)])
    def test_circulant_consistency(self, d, k):
        P = transition_matrix(ring_graph(d, k)).matrix
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(P)), np.sort(ring_transition_eigenvalues(d, k)), atol=1e-10
        )


class TestRandomWalk:
    def test_one_step(self):
        sys_ = random_walk_system(WeightedDigraph(C4), [1, 0, 0, 0])
        X = simulate_discrete(sys_, 2).states.real
        np.testing.assert_allclose(X[1], [0, 0.5, 0, 0.5])

    def test_uniform_stationary(self):
        sys_ = random_walk_system(WeightedDigraph(C4), np.full(4, 0.25))
        X = simulate_discrete(sys_, 10).states
        np.testing.assert_allclose(X, 0.25, atol=1e-15)

    def test_mass_conserved(self, rng):
        g = ring_graph(30, 8)
        x0 = rng.random(30)
        X = simulate_discrete(random_walk_system(g, x0 / x0.sum()), 50).states
        np.testing.assert_allclose(X.sum(axis=1).real, 1, atol=1e-12)
        assert np.all(X.real >= -1e-15)

    def test_unit_eigenvalue_simple(self):
        # ring graphs are strongly connected
        A = random_walk_system(ring_graph(20, 4), np.full(20, 0.05)).A
        ev = np.linalg.eigvals(A)
        assert np.sum(np.abs(ev - 1) < 1e-9) == 1

    @pytest.mark.parametrize("x0", [[0.5, 0.5, 0.5, -0.5], [0.2, 0.2, 0.2, 0.2], [1, 0, 0]])
    def test_invalid_distribution(self, x0):
        with pytest.raises(ValueError):
            random_walk_system(WeightedDigraph(C4), x0)


def test_edge_list_roundtrip(tmp_path):
    g = random_digraph(12, 30, seed=5)
    p = tmp_path / "edges.csv"
    write_edge_list(g, p)
    assert p.read_text().splitlines()[0] == "src,dst,weight"
    np.testing.assert_array_equal(read_edge_list(p, d=12).W, g.W)


def test_edge_list_bad_header(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("a,b,c\n1,2,1\n")
    with pytest.raises(ValueError):
        read_edge_list(p)
