"""Hot numeric kernels with numba and pure-numpy implementations.

Every kernel exists twice: a ``*_nb`` variant compiled with ``numba.njit``
and a ``*_np`` variant written in vectorized numpy.  The module-level
names (``classify_graph_masks``, ``mayer_product_batch``,
``boltzmann_batch``) point at one of the two, selected once at import:
numba when it is importable and the environment variable
``BOXGAS_NO_NUMBA`` is unset/false, numpy otherwise.  Both variants stay
importable so tests and ``benchmarks/bench_kernels.py`` can compare them.

Potentials are passed to kernels in a flattened radial form
``(kind, a, R, fwell, table_r, table_f)`` where ``fwell`` is the Mayer
value inside the well and ``table_*`` tabulate the Mayer function for the
tabulated kind.  Kernels evaluate the Mayer function f(r) directly:

    r <  a : -1            (hard core)
    a <= r < R : fwell or interpolated table value
    r >= R : 0
"""

import os

import numpy as np

KIND_ZERO = 0
KIND_HARD_CORE = 1
KIND_SQUARE_WELL = 2
KIND_TABULATED = 3

_disable = os.environ.get("BOXGAS_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _disable in ("1", "true", "yes")

try:  # pragma: no cover - exercised implicitly by the import
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via BOXGAS_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # identity decorator so the _nb names still exist (as plain python)
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# ---------------------------------------------------------------------------
# labeled-graph classification over edge bitmasks
# ---------------------------------------------------------------------------

def pair_index(i: int, j: int, n: int) -> int:
    """Bit position of the undirected pair (i, j), i < j, in lexicographic
    order: (0,1), (0,2), ..., (0,n-1), (1,2), ..."""
    if not (0 <= i < j < n):
        raise ValueError("need 0 <= i < j < n")
    return i * n - (i * (i + 1)) // 2 + (j - i - 1)


def pair_table(n: int) -> np.ndarray:
    """(n_pairs, 2) int array of pairs in canonical bit order."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


@njit(cache=True)
def _classify_masks_nb(n, pairs):  # pragma: no cover - jitted
    n_pairs = pairs.shape[0]
    total = 1 << n_pairs
    full = (1 << n) - 1
    flags = np.zeros(total, dtype=np.uint8)
    adj = np.zeros(n, dtype=np.int64)
    for mask in range(total):
        for v in range(n):
            adj[v] = 0
        for e in range(n_pairs):
            if (mask >> e) & 1:
                i = pairs[e, 0]
                j = pairs[e, 1]
                adj[i] |= 1 << j
                adj[j] |= 1 << i
        # connectivity from vertex 0 by bitset BFS
        reach = 1
        prev = 0
        while reach != prev:
            prev = reach
            for v in range(n):
                if (reach >> v) & 1:
                    reach |= adj[v]
        connected = reach == full
        if not connected:
            continue
        flags[mask] = 1
        if n == 1:
            continue
        if n == 2:
            if mask & 1:
                flags[mask] = 3
            continue
        # articulation test: remove each vertex, check the rest stays connected
        bicon = True
        for cut in range(n):
            start = 0 if cut != 0 else 1
            sub_full = full & ~(1 << cut)
            reach = 1 << start
            prev = 0
            while reach != prev:
                prev = reach
                for v in range(n):
                    if v != cut and ((reach >> v) & 1):
                        reach |= adj[v] & ~(1 << cut)
            if (reach & sub_full) != sub_full:
                bicon = False
                break
        if bicon:
            flags[mask] = 3
    return flags


def _classify_masks_np(n, pairs):
    """Vectorized classification of every mask on n labeled vertices.

    Adjacency is carried as per-vertex bitsets over the batch; BFS is n
    sweeps of OR-merges, which covers any diameter at n <= 7.
    """
    n_pairs = pairs.shape[0]
    total = 1 << n_pairs
    full = (1 << n) - 1
    flags = np.zeros(total, dtype=np.uint8)
    batch = 1 << min(n_pairs, 16)
    for start in range(0, total, batch):
        masks = np.arange(start, min(start + batch, total), dtype=np.int64)
        adj = np.zeros((n, masks.size), dtype=np.int64)
        for e in range(n_pairs):
            i, j = pairs[e]
            bit = (masks >> e) & 1
            adj[i] |= bit << j
            adj[j] |= bit << i

        def reach_from(start_v, cut=None):
            reach = np.full(masks.size, 1 << start_v, dtype=np.int64)
            cut_mask = ~np.int64(1 << cut) if cut is not None else np.int64(-1)
            for _ in range(n):
                for v in range(n):
                    if cut is not None and v == cut:
                        continue
                    sel = (reach >> v) & 1
                    reach |= (adj[v] & cut_mask) * sel
            return reach

        connected = reach_from(0) == full
        fl = connected.astype(np.uint8)
        if n == 2:
            fl |= ((masks & 1) == 1).astype(np.uint8) << 1
            fl[~connected] &= 1
        elif n >= 3:
            bicon = connected.copy()
            for cut in range(n):
                sub_full = full & ~(1 << cut)
                sv = 0 if cut != 0 else 1
                ok = (reach_from(sv, cut=cut) & sub_full) == sub_full
                bicon &= ok
            fl |= bicon.astype(np.uint8) << 1
        flags[start:start + masks.size] = fl
    return flags


def classify_graph_masks_impl(n: int, use_numba: bool) -> np.ndarray:
    """Flags array over all 2^(n(n-1)/2) edge masks.

    Bit 0 set: connected.  Bit 1 set: biconnected (n=2: edge present)."""
    pairs = pair_table(n)
    if n == 1:
        return np.array([1], dtype=np.uint8)
    if use_numba and HAVE_NUMBA:
        return _classify_masks_nb(n, pairs)
    return _classify_masks_np(n, pairs)


def classify_graph_masks(n: int) -> np.ndarray:
    return classify_graph_masks_impl(n, use_numba=HAVE_NUMBA)


# ---------------------------------------------------------------------------
# Mayer-function products over coordinate batches
# ---------------------------------------------------------------------------

@njit(cache=True)
def _mayer_f_r_nb(r, kind, a, R, fwell, table_r, table_f):  # pragma: no cover
    if kind == KIND_ZERO:
        return 0.0
    if r < a:
        return -1.0
    if r >= R:
        return 0.0
    if kind == KIND_HARD_CORE:
        return 0.0
    if kind == KIND_SQUARE_WELL:
        return fwell
    return np.interp(r, table_r, table_f)


@njit(cache=True)
def _mayer_product_nb(x, edges_i, edges_j, kind, a, R, fwell,
                      table_r, table_f):  # pragma: no cover - jitted
    m = x.shape[0]
    out = np.ones(m, dtype=np.float64)
    for s in range(m):
        val = 1.0
        for e in range(edges_i.shape[0]):
            r = abs(x[s, edges_i[e]] - x[s, edges_j[e]])
            val *= _mayer_f_r_nb(r, kind, a, R, fwell, table_r, table_f)
            if val == 0.0:
                break
        out[s] = val
    return out


def _mayer_f_r_np(r, kind, a, R, fwell, table_r, table_f):
    r = np.asarray(r, dtype=np.float64)
    if kind == KIND_ZERO:
        return np.zeros_like(r)
    out = np.zeros_like(r)
    core = r < a
    out[core] = -1.0
    mid = (~core) & (r < R)
    if kind == KIND_SQUARE_WELL:
        out[mid] = fwell
    elif kind == KIND_TABULATED:
        out[mid] = np.interp(r[mid], table_r, table_f)
    return out


def _mayer_product_np(x, edges_i, edges_j, kind, a, R, fwell, table_r, table_f):
    out = np.ones(x.shape[0], dtype=np.float64)
    for e in range(edges_i.shape[0]):
        r = np.abs(x[:, edges_i[e]] - x[:, edges_j[e]])
        out *= _mayer_f_r_np(r, kind, a, R, fwell, table_r, table_f)
    return out


def mayer_product_batch_impl(x, edges_i, edges_j, params, use_numba: bool):
    """Product of Mayer factors over the listed edges for each sample row.

    x: (M, k) coordinates (1D positions, one column per vertex).
    params: (kind, a, R, fwell, table_r, table_f).
    """
    kind, a, R, fwell, table_r, table_f = params
    x = np.ascontiguousarray(x, dtype=np.float64)
    if use_numba and HAVE_NUMBA:
        return _mayer_product_nb(x, edges_i, edges_j, kind, a, R, fwell,
                                 table_r, table_f)
    return _mayer_product_np(x, edges_i, edges_j, kind, a, R, fwell,
                             table_r, table_f)


def mayer_product_batch(x, edges_i, edges_j, params):
    return mayer_product_batch_impl(x, edges_i, edges_j, params,
                                    use_numba=HAVE_NUMBA)


# ---------------------------------------------------------------------------
# Boltzmann factors e^{-beta H} for direct partition-function sampling
# ---------------------------------------------------------------------------

@njit(cache=True)
def _boltzmann_nb(x, d, beta, kind, a, R, vwell,
                  table_r, table_v):  # pragma: no cover - jitted
    m = x.shape[0]
    npart = x.shape[1] // d
    out = np.ones(m, dtype=np.float64)
    for s in range(m):
        h = 0.0
        hard = False
        for i in range(npart):
            for j in range(i + 1, npart):
                r2 = 0.0
                for c in range(d):
                    diff = x[s, i * d + c] - x[s, j * d + c]
                    r2 += diff * diff
                r = np.sqrt(r2)
                if r < a and kind != KIND_ZERO:
                    hard = True
                    break
                if kind == KIND_SQUARE_WELL and r < R:
                    h += vwell
                elif kind == KIND_TABULATED and r < R:
                    h += np.interp(r, table_r, table_v)
            if hard:
                break
        out[s] = 0.0 if hard else np.exp(-beta * h)
    return out


def _boltzmann_np(x, d, beta, kind, a, R, vwell, table_r, table_v):
    m = x.shape[0]
    npart = x.shape[1] // d
    coords = x.reshape(m, npart, d)
    h = np.zeros(m)
    hard = np.zeros(m, dtype=bool)
    for i in range(npart):
        for j in range(i + 1, npart):
            r = np.linalg.norm(coords[:, i, :] - coords[:, j, :], axis=1)
            if kind != KIND_ZERO:
                hard |= r < a
            if kind == KIND_SQUARE_WELL:
                h += np.where(r < R, vwell, 0.0)
            elif kind == KIND_TABULATED:
                inside = r < R
                h[inside] += np.interp(r[inside], table_r, table_v)
    out = np.exp(-beta * h)
    out[hard] = 0.0
    return out


def boltzmann_batch_impl(x, d, beta, vparams, use_numba: bool):
    """e^{-beta H} for each sample row; x is (M, N*d) flattened coordinates.

    vparams: (kind, a, R, vwell, table_r, table_v) with raw potential values
    (not Mayer values)."""
    kind, a, R, vwell, table_r, table_v = vparams
    x = np.ascontiguousarray(x, dtype=np.float64)
    if use_numba and HAVE_NUMBA:
        return _boltzmann_nb(x, d, beta, kind, a, R, vwell, table_r, table_v)
    return _boltzmann_np(x, d, beta, kind, a, R, vwell, table_r, table_v)


def boltzmann_batch(x, d, beta, vparams):
    return boltzmann_batch_impl(x, d, beta, vparams, use_numba=HAVE_NUMBA)


def active_backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
