import itertools

import numpy as np
import pytest

from ldpcglass.graph import TannerGraph, from_matrix

ACCEPTANCE_LINES: list[str] = []


def matrix_from_checks(checks, n):
    H = np.zeros((len(checks), n), dtype=int)
    for a, c in enumerate(checks):
        H[a, list(c)] = 1
    return H


def graph_from_checks(checks, n) -> TannerGraph:
    return from_matrix(matrix_from_checks(checks, n))


def random_tree_graph(rng, max_vars=16) -> TannerGraph:
    """Random tree-shaped Tanner graph: each new check hangs 1-3 fresh bits off an existing bit."""
    n, checks = 1, []
    while True:
        k = int(rng.integers(1, 4))
        if n + k > max_vars:
            break
        anchor = int(rng.integers(n))
        checks.append([anchor] + list(range(n, n + k)))
        n += k
        if rng.random() < 0.15:
            break
    if not checks:
        checks = [[0, 1]]
        n = 2
    return graph_from_checks(checks, n)


def has_cycle(n_vars, n_checks, edges) -> bool:
    """Union-find cycle search on a bipartite edge list of (variable, check) pairs."""
    parent = list(range(n_vars + n_checks))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, a in edges:
        ri, ra = find(i), find(n_vars + a)
        if ri == ra:
            return True
        parent[ri] = ra
    return False


def brute_force_posterior(H, h):
    """Posterior over x in F_2^N filtered by H x = 0, from a plain loop over all 2^N words."""
    H = np.asarray(H)
    n = H.shape[1]
    words = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    ok = ~np.any((words @ H.T) % 2, axis=1)
    spins = 1 - 2 * words[ok]
    logw = spins @ np.asarray(h, dtype=np.float64)
    p = np.exp(logw - logw.max())
    p /= p.sum()
    return spins, p


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
