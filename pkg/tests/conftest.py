import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def bfs_component(adj, start=0):
    """Independent reachability oracle (plain set-based BFS)."""
    n = len(adj)
    seen, frontier = {start}, [start]
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(n):
                if adj[i][j] and j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return seen


@pytest.fixture
def path3():
    from exdiff.network import Network
    return Network.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
