"""Communication graphs, Laplacians and their spectra.

Undirected follower graphs are stored as dense adjacency matrices.  A
leader-follower topology adds a distinguished leader node that sends
information to a subset of followers and receives none back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import AssumptionViolated, NonSymmetricError

ZERO_TOL = 1e-9
SYMMETRY_TOL = 1e-9


def _check_adjacency(adj):
    adj = np.array(adj, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
        raise ValueError(f"adjacency must be a non-empty square matrix, got shape {adj.shape}")
    if not np.all(np.isfinite(adj)) or np.any(adj < 0):
        raise ValueError("adjacency entries must be finite and nonnegative")
    if np.any(np.diag(adj) != 0):
        raise ValueError("adjacency must have a zero diagonal (no self loops)")
    if not np.allclose(adj, adj.T, rtol=0, atol=SYMMETRY_TOL):
        raise NonSymmetricError("undirected graph requires a symmetric adjacency matrix")
    adj.setflags(write=False)
    return adj


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph given by its adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "adjacency", _check_adjacency(self.adjacency))

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, n, edges, weights=None) -> "Graph":
        adj = np.zeros((n, n))
        weights = [1.0] * len(edges) if weights is None else weights
        for (i, j), w in zip(edges, weights):
            if i == j:
                raise ValueError(f"self loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} nodes")
            adj[i, j] = adj[j, i] = w
        return cls(adj)

    def edges(self):
        i, j = np.nonzero(np.triu(self.adjacency))
        return [(int(a), int(b)) for a, b in zip(i, j)]


@dataclass(frozen=True)
class LeaderFollowerGraph:
    """Undirected follower graph plus one-way links from a leader.

    ``leader_links[i]`` is the weight a_{i0} with which follower ``i``
    observes the leader.
    """

    followers: Graph
    leader_links: np.ndarray = field(default=None)

    def __post_init__(self):
        if not isinstance(self.followers, Graph):
            object.__setattr__(self, "followers", Graph(self.followers))
        links = np.zeros(self.n_followers) if self.leader_links is None else np.array(self.leader_links, dtype=float)
        if links.shape != (self.n_followers,):
            raise ValueError("leader_links must have one entry per follower")
        if not np.all(np.isfinite(links)) or np.any(links < 0):
            raise ValueError("leader_links must be finite and nonnegative")
        links.setflags(write=False)
        object.__setattr__(self, "leader_links", links)

    @property
    def n_followers(self) -> int:
        return self.followers.n_nodes

    @property
    def follower_adjacency(self) -> np.ndarray:
        return self.followers.adjacency

    def augmented_adjacency(self) -> np.ndarray:
        """(N+1)x(N+1) adjacency with the leader as node 0; row i lists whom i listens to."""
        n = self.n_followers
        adj = np.zeros((n + 1, n + 1))
        adj[1:, 1:] = self.follower_adjacency
        adj[1:, 0] = self.leader_links
        return adj


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    lambda2: float
    lambda_max: float


def laplacian(g) -> np.ndarray:
    """Laplacian D - A of a graph (or of the follower graph of a leader-follower graph)."""
    if isinstance(g, LeaderFollowerGraph):
        g = g.followers
    adj = g.adjacency if isinstance(g, Graph) else _check_adjacency(g)
    return np.diag(adj.sum(axis=1)) - adj


def spectrum(L) -> LaplacianSpectrum:
    L = np.asarray(L, dtype=float)
    scale = max(1.0, float(np.max(np.abs(L)))) if L.size else 1.0
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("Laplacian must be square")
    if np.max(np.abs(L - L.T)) > SYMMETRY_TOL * scale:
        raise NonSymmetricError("Laplacian is not symmetric")
    ev = np.linalg.eigvalsh(0.5 * (L + L.T))
    ev.sort()
    # the zero eigenvalue is known exactly; remove roundoff so downstream
    # comparisons against 0 are not polluted by -1e-16 values
    ev[np.abs(ev) < ZERO_TOL * scale] = 0.0
    lam2 = float(ev[1]) if ev.size > 1 else 0.0
    return LaplacianSpectrum(eigenvalues=ev, lambda2=lam2, lambda_max=float(ev[-1]))


def is_connected(g) -> bool:
    """Single connected component, decided by traversal rather than by λ2."""
    if isinstance(g, LeaderFollowerGraph):
        g = g.followers
    adj = g.adjacency if isinstance(g, Graph) else _check_adjacency(g)
    n_comp, _ = connected_components(adj > 0, directed=False)
    return n_comp == 1


def leader_reaches_all(g: LeaderFollowerGraph) -> bool:
    """True iff every follower has a directed path from the leader."""
    adj = g.augmented_adjacency()
    # information flows j -> i when adj[i, j] > 0, so traverse the transpose
    order = breadth_first_order(adj.T > 0, 0, directed=True, return_predecessors=False)
    return len(order) == g.n_followers + 1


def leader_follower_partition(g: LeaderFollowerGraph):
    """Split the augmented Laplacian into the pinned block L1 and the leader column L2.

    Returns
    -------
    L1 : (N, N) ndarray
        Follower Laplacian plus ``diag(leader_links)``; positive definite
        whenever the leader reaches every follower.
    L2 : (N,) ndarray
        Equal to ``-leader_links``.
    """
    if not leader_reaches_all(g):
        raise AssumptionViolated("leader has no directed path to every follower")
    L1 = laplacian(g.followers) + np.diag(g.leader_links)
    lam_min = float(np.linalg.eigvalsh(L1)[0])
    if lam_min <= ZERO_TOL:
        raise AssumptionViolated(f"pinned Laplacian block is not positive definite (λ_min = {lam_min:.3g})")
    return L1, -np.array(g.leader_links)


def augmented_laplacian(g: LeaderFollowerGraph) -> np.ndarray:
    L1, L2 = leader_follower_partition(g)
    n = g.n_followers
    Lhat = np.zeros((n + 1, n + 1))
    Lhat[1:, 0] = L2
    Lhat[1:, 1:] = L1
    return Lhat


def centering_projector(N: int) -> np.ndarray:
    """M = I - 11^T / N."""
    if N < 1:
        raise ValueError("N must be positive")
    return np.eye(N) - np.full((N, N), 1.0 / N)


# -- small topology helpers ---------------------------------------------------

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def ring_graph(n: int) -> Graph:
    if n < 3:
        return path_graph(n)
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph(np.ones((n, n)) - np.eye(n))


def graph_from_dict(d: dict):
    """Parse ``{"n", "edges", "weights"?, "leader_links"?}``.

    A ``leader_links`` key (list of 0-based follower indices observing the
    leader) marks a leader-follower graph.
    """
    try:
        n = int(d["n"])
        edges = [tuple(int(v) for v in e) for e in d.get("edges", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed graph description: {exc}") from exc
    for e in edges:
        if len(e) != 2:
            raise ValueError(f"edge {e} must have two endpoints")
    g = Graph.from_edges(n, edges, d.get("weights"))
    if "leader_links" not in d:
        return g
    links = np.zeros(n)
    for i in d["leader_links"]:
        if not 0 <= int(i) < n:
            raise ValueError(f"leader link to follower {i} out of range")
        links[int(i)] = 1.0
    return LeaderFollowerGraph(g, links)


def graph_to_dict(g) -> dict:
    base = g.followers if isinstance(g, LeaderFollowerGraph) else g
    out = {"n": base.n_nodes, "edges": [list(e) for e in base.edges()]}
    w = [float(base.adjacency[i, j]) for i, j in base.edges()]
    if any(v != 1.0 for v in w):
        out["weights"] = w
    if isinstance(g, LeaderFollowerGraph):
        out["leader_links"] = [int(i) for i in np.nonzero(g.leader_links)[0]]
    return out
