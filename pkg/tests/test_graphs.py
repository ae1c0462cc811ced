from itertools import combinations

import pytest

from boxgas import LabeledGraph, enumerate_graphs, is_biconnected, is_connected
from boxgas.errors import ArgumentError, CapacityError
from boxgas.graphs import family_count, load_count_cache
from boxgas._kernels import pair_index


def graph_from_edges(n, edges):
    mask = 0
    for i, j in edges:
        mask |= 1 << pair_index(min(i, j), max(i, j), n)
    return LabeledGraph(n, mask)


def test_is_connected_basics():
    assert is_connected(LabeledGraph(1, 0))
    assert is_connected(graph_from_edges(3, [(0, 1), (1, 2)]))
    assert not is_connected(graph_from_edges(3, [(0, 1)]))


def test_is_biconnected_basics():
    assert is_biconnected(graph_from_edges(2, [(0, 1)]))
    assert is_biconnected(graph_from_edges(3, [(0, 1), (1, 2), (0, 2)]))
    assert not is_biconnected(graph_from_edges(3, [(0, 1), (1, 2)]))
    with pytest.raises(ArgumentError):
        is_biconnected(LabeledGraph(1, 0))


def brute_counts(n):
    """Independent brute force over all edge subsets with set-based DFS."""
    pairs = list(combinations(range(n), 2))
    conn = bic = 0
    for mask in range(1 << len(pairs)):
        adj = {v: set() for v in range(n)}
        for e, (i, j) in enumerate(pairs):
            if (mask >> e) & 1:
                adj[i].add(j)
                adj[j].add(i)

        def component(start, skip=None):
            seen, stack = {start}, [start]
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if w != skip and w not in seen:
                        seen.add(w)
                        stack.append(w)
            return seen

        if len(component(0)) != n:
            continue
        conn += 1
        if n == 2:
            bic += 1 if mask & 1 else 0
            continue
        cuts = any(
            len(component(0 if cut else 1, skip=cut)) != n - 1
            for cut in range(n))
        bic += 0 if cuts else 1
    return conn, bic


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_enumeration_matches_brute_force(n):
    conn, bic = brute_counts(n)
    assert family_count(n, "connected") == conn
    assert family_count(n, "biconnected") == bic


def test_known_counts():
    assert family_count(3, "connected") == 4
    assert family_count(4, "connected") == 38
    assert family_count(4, "biconnected") == 10


def test_family_members_satisfy_predicate():
    for g in enumerate_graphs(4, "biconnected"):
        assert is_biconnected(g)
        assert is_connected(g)


def test_biconnected_subset_of_connected():
    for n in range(2, 6):
        bic = set(enumerate_graphs(n, "biconnected").masks.tolist())
        conn = set(enumerate_graphs(n, "connected").masks.tolist())
        assert bic <= conn


def test_connected_plus_disconnected_total():
    for n in range(2, 6):
        total = 1 << (n * (n - 1) // 2)
        conn = family_count(n, "connected")
        assert conn + (total - conn) == total
        assert len(enumerate_graphs(n, "all")) == total


def test_deterministic_order():
    a = enumerate_graphs(5, "connected").masks
    b = enumerate_graphs(5, "connected").masks
    assert (a == b).all()


def test_capacity_cap():
    with pytest.raises(CapacityError):
        enumerate_graphs(8, "connected")


def test_count_cache_cross_check():
    cache = load_count_cache()
    assert cache, "shipped count cache missing"
    for (n, pred), count in cache.items():
        if n <= 6:
            assert family_count(n, pred) == count


def test_pair_index_order():
    # lexicographic (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
    order = [pair_index(i, j, 4) for i in range(4) for j in range(i + 1, 4)]
    assert order == list(range(6))
