import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_consensus.errors import AssumptionViolated, NonSymmetricError
from robust_consensus.graph import (
    Graph,
    LeaderFollowerGraph,
    centering_projector,
    complete_graph,
    graph_from_dict,
    graph_to_dict,
    is_connected,
    laplacian,
    leader_follower_partition,
    leader_reaches_all,
    path_graph,
    ring_graph,
    spectrum,
)


def _union_find_connected(n, edges):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in edges:
        parent[find(i)] = find(j)
    return len({find(i) for i in range(n)}) == 1


@st.composite
def random_graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [e for e, keep in zip(pairs, mask) if keep]
    return n, edges


def test_laplacian_examples():
    np.testing.assert_array_equal(laplacian(path_graph(3)), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    np.testing.assert_array_equal(laplacian(path_graph(2)), [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(laplacian(complete_graph(3)), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


def test_spectrum_examples():
    sp = spectrum(laplacian(complete_graph(2)))
    np.testing.assert_allclose(sp.eigenvalues, [0, 2], atol=1e-12)
    assert sp.lambda2 == pytest.approx(2)
    assert spectrum(laplacian(complete_graph(3))).lambda2 == pytest.approx(3)
    # roots of lambda (lambda - 1)(lambda - 3)
    sp = spectrum(laplacian(path_graph(3)))
    np.testing.assert_allclose(sp.eigenvalues, [0, 1, 3], atol=1e-12)
    assert sp.lambda_max == pytest.approx(3)


def test_spectrum_rejects_nonsymmetric():
    with pytest.raises(NonSymmetricError):
        spectrum(np.array([[1.0, -1.0], [0.0, 0.0]]))


def test_graph_validation():
    with pytest.raises(NonSymmetricError):
        Graph([[0, 1], [0, 0]])
    with pytest.raises(ValueError):
        Graph([[1, 1], [1, 0]])
    with pytest.raises(ValueError):
        Graph([[0, -1], [-1, 0]])
    g = path_graph(3)
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 5.0


def test_is_connected_examples():
    assert is_connected(path_graph(3))
    assert not is_connected(Graph(np.zeros((2, 2))))
    assert is_connected(complete_graph(6))


def test_weighted_graph_accepted():
    g = Graph.from_edges(3, [(0, 1), (1, 2)], weights=[2.0, 0.5])
    L = laplacian(g)
    np.testing.assert_allclose(L.sum(axis=1), 0)
    assert L[1, 1] == pytest.approx(2.5)


def test_partition_examples():
    L1, L2 = leader_follower_partition(LeaderFollowerGraph(Graph(np.zeros((1, 1))), [1.0]))
    np.testing.assert_array_equal(L1, [[1.0]])
    np.testing.assert_array_equal(L2, [-1.0])

    lf = LeaderFollowerGraph(path_graph(2), [1.0, 0.0])
    L1, _ = leader_follower_partition(lf)
    np.testing.assert_allclose(L1, [[2, -1], [-1, 1]])
    assert np.linalg.eigvalsh(L1)[0] == pytest.approx((3 - np.sqrt(5)) / 2, abs=1e-12)


def test_partition_needs_leader_reachability():
    with pytest.raises(AssumptionViolated):
        leader_follower_partition(LeaderFollowerGraph(Graph(np.zeros((2, 2))), [0.0, 0.0]))
    # one follower linked, the other isolated
    lf = LeaderFollowerGraph(Graph(np.zeros((2, 2))), [1.0, 0.0])
    assert not leader_reaches_all(lf)
    with pytest.raises(AssumptionViolated):
        leader_follower_partition(lf)


def test_centering_projector_examples():
    np.testing.assert_allclose(centering_projector(2), [[0.5, -0.5], [-0.5, 0.5]])
    np.testing.assert_allclose(centering_projector(1), [[0.0]])
    ev = np.linalg.eigvalsh(centering_projector(7))
    np.testing.assert_allclose(ev, [0] + [1] * 6, atol=1e-12)


def test_graph_dict_roundtrip():
    d = {"n": 4, "edges": [[0, 1], [1, 2], [2, 3]], "leader_links": [0, 2]}
    g = graph_from_dict(d)
    assert isinstance(g, LeaderFollowerGraph)
    np.testing.assert_array_equal(g.leader_links, [1, 0, 1, 0])
    g2 = graph_from_dict(graph_to_dict(g))
    np.testing.assert_array_equal(g2.augmented_adjacency(), g.augmented_adjacency())
    plain = graph_from_dict({"n": 3, "edges": [[0, 1], [1, 2]]})
    assert isinstance(plain, Graph)
    assert graph_to_dict(plain)["n"] == 3


@settings(max_examples=150, deadline=None)
@given(random_graphs())
def test_connectivity_matches_union_find_and_spectrum(data):
    n, edges = data
    g = Graph.from_edges(n, edges)
    L = laplacian(g)
    np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)
    np.testing.assert_allclose(L, L.T)
    sp = spectrum(L)
    assert np.all(sp.eigenvalues >= -1e-10)
    connected = _union_find_connected(n, edges)
    assert is_connected(g) == connected
    if n > 1:
        assert (sp.lambda2 > 1e-8) == connected


@settings(max_examples=100, deadline=None)
@given(random_graphs(max_n=8), st.integers(0, 2 ** 32 - 1))
def test_partition_positive_definite_when_valid(data, seed):
    n, edges = data
    rng = np.random.default_rng(seed)
    links = (rng.random(n) < 0.4).astype(float)
    lf = LeaderFollowerGraph(Graph.from_edges(n, edges), links)
    try:
        L1, _ = leader_follower_partition(lf)
    except AssumptionViolated:
        assert not leader_reaches_all(lf)
        return
    assert np.linalg.eigvalsh(L1)[0] > 0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_projector_properties(N, n, seed):
    x = np.random.default_rng(seed).normal(size=(N, n))
    M = centering_projector(N)
    np.testing.assert_allclose((M @ x).sum(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(M @ x, x - x.mean(axis=0), atol=1e-12)
    same = np.tile(x[0], (N, 1))
    assert np.linalg.norm(M @ same) < 1e-12


def test_topology_helpers():
    assert is_connected(ring_graph(5))
    assert spectrum(laplacian(ring_graph(4))).lambda2 == pytest.approx(2.0)
    assert len(list(path_graph(4).edges())) == 3
