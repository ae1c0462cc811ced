"""Labeled-graph enumeration: connected and biconnected families.

Graphs on [n] are edge bitmasks over the n(n-1)/2 vertex pairs in
lexicographic order (i < j).  Full enumeration walks every mask with the
classification kernel (numba or numpy, see _kernels); n is capped at 7
where the mask space is 2^21.

Convention: on two vertices the single-edge graph counts as biconnected,
so the first irreducible coefficient reduces to the plain Mayer integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import classify_graph_masks, pair_index, pair_table
from .errors import ArgumentError, CapacityError

N_GRAPH_MAX = 7

PREDICATES = ("connected", "biconnected", "all")

_DATA_FILE = Path(__file__).parent / "data" / "graph_counts.txt"

_classify_cache: dict[int, np.ndarray] = {}


@dataclass(frozen=True)
class LabeledGraph:
    """A labeled simple graph: vertex count and edge bitmask."""

    n: int
    mask: int

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError("need n >= 1")
        if not 0 <= self.mask < (1 << (self.n * (self.n - 1) // 2)):
            raise ArgumentError("edge mask out of range")

    def edges(self) -> list[tuple[int, int]]:
        pairs = pair_table(self.n)
        return [tuple(pairs[e]) for e in range(len(pairs))
                if (self.mask >> e) & 1]

    def has_edge(self, i: int, j: int) -> bool:
        if i > j:
            i, j = j, i
        return bool((self.mask >> pair_index(i, j, self.n)) & 1)

    def edge_count(self) -> int:
        return bin(self.mask).count("1")

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n)]
        for i, j in self.edges():
            adj[i].add(j)
            adj[j].add(i)
        return adj


def is_connected(g: LabeledGraph) -> bool:
    """Plain DFS connectivity; the independent reference for the kernels."""
    if g.n == 1:
        return True
    adj = g.adjacency()
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def is_biconnected(g: LabeledGraph) -> bool:
    """Connected with no articulation vertex (n=2: the edge is present)."""
    if g.n < 2:
        raise ArgumentError("biconnectivity needs n >= 2")
    if g.n == 2:
        return g.mask == 1
    if not is_connected(g):
        return False
    adj = g.adjacency()
    for cut in range(g.n):
        start = 0 if cut != 0 else 1
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w != cut and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != g.n - 1:
            return False
    return True


@dataclass
class GraphFamily:
    """All labeled graphs on [n] satisfying a predicate, as a mask array."""

    n: int
    predicate: str
    masks: np.ndarray

    def __len__(self) -> int:
        return int(self.masks.size)

    def __iter__(self):
        for m in self.masks:
            yield LabeledGraph(self.n, int(m))


def _flags(n: int) -> np.ndarray:
    if n not in _classify_cache:
        _classify_cache[n] = classify_graph_masks(n)
    return _classify_cache[n]


def enumerate_graphs(n: int, predicate: str = "connected") -> GraphFamily:
    """Every labeled graph on [n] satisfying the predicate, each once."""
    if predicate not in PREDICATES:
        raise ArgumentError(f"unknown predicate {predicate!r}")
    if n < 1:
        raise ArgumentError("need n >= 1")
    if n > N_GRAPH_MAX:
        raise CapacityError(
            f"n={n} exceeds the enumeration cap {N_GRAPH_MAX} "
            f"(2^{n*(n-1)//2} masks)")
    if predicate == "biconnected" and n < 2:
        raise ArgumentError("biconnected enumeration needs n >= 2")
    total = 1 << (n * (n - 1) // 2)
    if predicate == "all":
        masks = np.arange(total, dtype=np.int64)
    else:
        flags = _flags(n)
        bit = 1 if predicate == "connected" else 2
        masks = np.nonzero(flags & bit)[0].astype(np.int64)
    return GraphFamily(n=n, predicate=predicate, masks=masks)


def family_count(n: int, predicate: str) -> int:
    return len(enumerate_graphs(n, predicate))


# ---------------------------------------------------------------------------
# count cache (small text file used by the tests as a cross-check)
# ---------------------------------------------------------------------------

def load_count_cache(path: Path | None = None) -> dict[tuple[int, str], int]:
    path = Path(path) if path else _DATA_FILE
    cache: dict[tuple[int, str], int] = {}
    if not path.exists():
        return cache
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        n_str, pred, count = line.split()
        cache[(int(n_str), pred)] = int(count)
    return cache


def write_count_cache(counts: dict[tuple[int, str], int],
                      path: Path | None = None) -> Path:
    path = Path(path) if path else _DATA_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# n predicate count"]
    for (n, pred), c in sorted(counts.items()):
        lines.append(f"{n} {pred} {c}")
    path.write_text("\n".join(lines) + "\n")
    return path
