"""Undirected agent topologies with implicit self-loops."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class NetworkError(ValueError):
    """Raised for malformed, out-of-range or disconnected topologies."""


def reachable(adjacency: np.ndarray, start: int = 0) -> np.ndarray:
    """Boolean mask of nodes reachable from `start` following nonzero entries.

    ``adjacency[i, j] != 0`` is read as an arc ``i -> j``; for a symmetric
    matrix this is plain BFS on the undirected graph.
    """
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adjacency[i]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return seen


def strongly_connected(adjacency: np.ndarray) -> bool:
    if adjacency.shape[0] == 0:
        return False
    support = adjacency != 0
    return bool(reachable(support).all() and reachable(support.T).all())


@dataclass(frozen=True)
class Network:
    """Connected undirected graph; ``neighbors[k]`` always contains ``k``."""

    n_agents: int
    neighbors: tuple[frozenset[int], ...]

    @classmethod
    def from_edges(cls, n: int, edges) -> Network:
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise NetworkError(f"n_agents must be a positive integer, got {n!r}")
        n = int(n)
        sets = [{k} for k in range(n)]
        for edge in edges:
            if len(edge) != 2:
                raise NetworkError(f"edge {edge!r} is not a pair")
            i, j = (int(v) for v in edge)
            if not (0 <= i < n and 0 <= j < n):
                raise NetworkError(f"edge ({i}, {j}) out of range for n={n}")
            sets[i].add(j)
            sets[j].add(i)
        net = cls(n, tuple(frozenset(s) for s in sets))
        if not net.is_connected():
            raise NetworkError("network is disconnected")
        return net

    @property
    def degrees(self) -> np.ndarray:
        """n_k = |N_k|, self included."""
        return np.array([len(s) for s in self.neighbors], dtype=int)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n_agents, self.n_agents), dtype=bool)
        for k, nbrs in enumerate(self.neighbors):
            adj[k, sorted(nbrs)] = True
        return adj

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n_agents)
                for j in sorted(self.neighbors[i]) if j > i]

    def is_connected(self) -> bool:
        return bool(reachable(self.adjacency()).all())

    def to_dict(self) -> dict:
        return {"n": self.n_agents, "edges": [list(e) for e in self.edges()]}


def parse_network(data: dict) -> Network:
    try:
        n = data["n"]
        edges = data.get("edges", [])
    except (TypeError, KeyError) as exc:
        raise NetworkError(f"network JSON needs 'n' and 'edges': {exc}") from exc
    return Network.from_edges(n, edges)


def load_network(path) -> Network:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise NetworkError(f"cannot parse {path}: {exc}") from exc
    return parse_network(data)


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n", encoding="utf-8")


def generate_random_network(n: int, edge_prob: float, seed: int) -> Network:
    """Erdos-Renyi graph, augmented with bridging edges until connected.

    Draw order (``numpy.random.default_rng(seed)``, PCG64): one uniform per
    pair ``i < j`` in row-major order; then, while more than one component
    remains, one integer picks a node of the component holding agent 0 and
    one picks a node of the first unreached component.
    """
    if n < 1:
        raise NetworkError(f"n must be >= 1, got {n}")
    if not 0.0 < edge_prob <= 1.0:
        raise NetworkError(f"edge_prob must lie in (0, 1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < edge_prob
    adj = np.eye(n, dtype=bool)
    adj[iu[keep], ju[keep]] = True
    adj[ju[keep], iu[keep]] = True
    while True:
        seen = reachable(adj)
        if seen.all():
            break
        inside = np.flatnonzero(seen)
        outside = np.flatnonzero(~seen)
        # first unreached node's component
        comp = np.flatnonzero(reachable(adj, int(outside[0])))
        a = int(inside[rng.integers(inside.size)])
        b = int(comp[rng.integers(comp.size)])
        adj[a, b] = adj[b, a] = True
    return Network(n, tuple(frozenset(np.flatnonzero(row).tolist()) for row in adj))


def generate_unbalanced_network(n_hubs: int, n_leaves: int) -> Network:
    """Hubs (agents ``0..n_hubs-1``) touch everyone; leaves touch only hubs."""
    if n_hubs < 1 or n_leaves < 1:
        raise NetworkError("need at least one hub and one leaf")
    n = n_hubs + n_leaves
    edges = [(h, k) for h in range(n_hubs) for k in range(h + 1, n)]
    return Network.from_edges(n, edges)
