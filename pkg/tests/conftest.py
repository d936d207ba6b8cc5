import itertools
import math

import numpy as np
import pytest

from graphbandit.graphs import LabeledGraph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_force_min_cut(g: LabeledGraph, observed, n_labels=2):
    """Minimum cutsize over every labeling that keeps observed vertices' labels."""
    free = [v for v in range(1, g.n + 1) if v not in observed]
    best = None
    for assignment in itertools.product(range(n_labels), repeat=len(free)):
        y = {v: g.labels[v] for v in observed}
        y.update(zip(free, assignment))
        cut = sum(1 for u, v in g.edges if y[u] != y[v])
        best = cut if best is None else min(best, cut)
    return best


def recursive_euler_walk(adj, u, parent=None, out=None):
    """Reference doubled-edge walk written recursively, children ascending."""
    if out is None:
        out = []
    out.append(u)
    for c in sorted(adj[u]):
        if c != parent:
            recursive_euler_walk(adj, c, u, out)
            out.append(u)
    return out


def random_labeled_tree(n, n_labels, rng):
    parents = [int(rng.integers(1, v)) for v in range(2, n + 1)]
    edges = list(zip(parents, range(2, n + 1)))
    labels = {v: int(rng.integers(n_labels)) for v in range(1, n + 1)}
    return LabeledGraph(n, edges, labels)


def bisection_weights(cum_loss, local_t, tol=1e-12):
    """Independent oracle: bisect on x in (min L - 2 sqrt(K)/eta, min L - 2/eta]."""
    L = np.asarray(cum_loss, dtype=float)
    eta = 2.0 / math.sqrt(local_t + 1)
    m = L.min()

    def total(x):
        return np.sum(4.0 / (eta * (L - x)) ** 2)

    lo = m - 2.0 * math.sqrt(len(L)) / eta - 1.0
    hi = m - 2.0 / eta
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if total(mid) > 1.0:
            hi = mid
        else:
            lo = mid
    x = 0.5 * (lo + hi)
    return 4.0 / (eta * (L - x)) ** 2
