"""Gauss-Legendre machinery for piecewise-discontinuous integrands.

Two workhorses live here:

* cascade integrals at d = 1: nested quadrature of Mayer-function
  products over a box (or with one vertex pinned at the origin).  Each
  integration axis is split at every point where a hard-core or range
  discontinuity can sit given the already-fixed coordinates, plus the
  constant offsets where those split points can collide at outer levels.
  After splitting, the integrand is piecewise polynomial for hard-core /
  square-well potentials, so per-piece Gauss-Legendre is exact up to
  rounding.

* piecewise-polynomial representation and convolution, used by the
  ordered-sector partition-function oracle.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from . import _kernels
from .potentials import PairPotential


def gauss_nodes(points: int, lo: float, hi: float):
    nodes, weights = np.polynomial.legendre.leggauss(points)
    half = 0.5 * (hi - lo)
    return half * nodes + 0.5 * (hi + lo), half * weights


def split_interval(lo: float, hi: float, raw_points) -> np.ndarray:
    """Sorted unique breakpoints of [lo, hi] including both ends."""
    pts = [lo, hi]
    for p in raw_points:
        if lo < p < hi:
            pts.append(float(p))
    pts = np.array(sorted(pts))
    keep = np.concatenate(([True], np.diff(pts) > 1e-13 * max(1.0, hi - lo)))
    return pts[keep]


def piecewise_nodes(lo: float, hi: float, raw_breaks, points: int):
    """Nodes and weights of per-piece Gauss-Legendre on a split interval."""
    breaks = split_interval(lo, hi, raw_breaks)
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        x, w = gauss_nodes(points, a, b)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


# ---------------------------------------------------------------------------
# cascade integrals (d = 1)
# ---------------------------------------------------------------------------

def _scale_offsets(potential: PairPotential, order: int) -> np.ndarray:
    """All sums of up to `order` signed potential scales (a, R, knots)."""
    scales = [s for s in {potential.hard_core, potential.interaction_range}
              if s > 0]
    if potential.kind == "tabulated-radial":
        scales.extend(float(r) for r in potential.table_r if r > 0)
    scales = sorted(set(scales))
    sums = {0.0}
    for _ in range(order):
        new = set(sums)
        for s0 in sums:
            for s in scales:
                new.add(s0 + s)
                new.add(s0 - s)
        sums = new
    return np.array(sorted(sums))


def cascade_mayer_integral(potential: PairPotential, beta: float,
                           edges: list[tuple[int, int]], n_coords: int,
                           bounds: tuple[float, float],
                           fixed: tuple[float, ...] = (),
                           points: int = 12) -> float:
    """Integral over [lo, hi]^n_coords of the Mayer product over `edges`.

    Vertices are numbered with the fixed ones first; edge indices refer to
    that combined numbering.  Exact (up to rounding) for piecewise-constant
    Mayer functions; spectrally accurate for smooth tabulated ones.
    """
    if potential.kind == "zero" and edges:
        return 0.0
    lo, hi = bounds
    k = n_coords
    params = potential.mayer_params(beta)
    edges_i = np.array([e[0] for e in edges], dtype=np.int64)
    edges_j = np.array([e[1] for e in edges], dtype=np.int64)
    n_fixed = len(fixed)

    def level(j: int, known: list[float]) -> float:
        order = max(1, k - j)
        offsets = _scale_offsets(potential, order)
        raw = [p + t for p in known for t in offsets]
        # collisions with the box edges show up one level out
        raw.extend(lo + t for t in offsets)
        raw.extend(hi + t for t in offsets)
        xs, ws = piecewise_nodes(lo, hi, raw, points)
        if j == k - 1:
            coords = np.empty((xs.size, n_fixed + k))
            coords[:, :n_fixed + j] = np.asarray(known)
            coords[:, -1] = xs
            vals = _kernels.mayer_product_batch(coords, edges_i, edges_j, params)
            return float(np.sum(ws * vals))
        return float(sum(w * level(j + 1, known + [float(x)])
                         for x, w in zip(xs, ws)))

    return level(0, list(fixed))


def box_graph_integral(potential: PairPotential, beta: float, side: float,
                       edges: list[tuple[int, int]], n_vertices: int,
                       points: int = 12) -> float:
    """Integral over the box [0, side]^n of the edge-product of Mayer
    factors (all vertices free)."""
    return cascade_mayer_integral(potential, beta, edges, n_vertices,
                                  (0.0, side), fixed=(), points=points)


def pinned_graph_integral(potential: PairPotential, beta: float,
                          edges: list[tuple[int, int]], n_vertices: int,
                          points: int = 12) -> float:
    """Whole-line integral with vertex 0 pinned at the origin; the domain
    is truncated to the interaction support [-n R, n R] per coordinate."""
    span = (n_vertices - 1) * max(potential.interaction_range,
                                  potential.hard_core)
    if span <= 0:
        return 0.0
    return cascade_mayer_integral(potential, beta, edges, n_vertices - 1,
                                  (-span, span), fixed=(0.0,), points=points)


# ---------------------------------------------------------------------------
# Monte Carlo fallback for dimensions/orders the cascade cannot reach
# ---------------------------------------------------------------------------

def _bfs_depths(edges, n_vertices: int) -> np.ndarray:
    adj = [[] for _ in range(n_vertices)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    depth = np.full(n_vertices, n_vertices, dtype=float)
    depth[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if depth[w] > depth[v] + 1:
                    depth[w] = depth[v] + 1
                    nxt.append(w)
        frontier = nxt
    return depth


def mc_graph_integral(potential: PairPotential, beta: float,
                      edges: list[tuple[int, int]], n_vertices: int,
                      dimension: int, samples: int, seed: int,
                      box_side: float | None = None):
    """Seeded MC estimate of a graph's Mayer-product integral.

    box_side set: all vertices uniform over the box, plain volume weight.
    box_side None: vertex 0 pinned at the origin, the rest uniform over
    [-span, span]^d.  Returns (value, standard_error).
    """
    rng = np.random.default_rng(seed)
    params = potential.mayer_params(beta)
    edges_i = np.array([e[0] for e in edges], dtype=np.int64)
    edges_j = np.array([e[1] for e in edges], dtype=np.int64)
    if box_side is not None:
        n_free = n_vertices
        spans = np.full(n_free, box_side)
        offsets = np.zeros(n_free)
    else:
        # pinned case: vertex v can sit at most (graph distance) * R from
        # the origin, so shrink each coordinate's box accordingly
        n_free = n_vertices - 1
        reach = max(potential.interaction_range, potential.hard_core)
        depth = _bfs_depths(edges, n_vertices)
        spans = 2.0 * reach * depth[1:]
        offsets = -0.5 * spans
    volume = float(np.prod(spans) ** dimension)
    total = 0.0
    total_sq = 0.0
    done = 0
    batch = 200_000
    while done < samples:
        m = min(batch, samples - done)
        u = rng.uniform(0.0, 1.0, size=(m, n_free, dimension))
        x = offsets[None, :, None] + spans[None, :, None] * u
        if box_side is None:
            x = np.concatenate([np.zeros((m, 1, dimension)), x], axis=1)
        if dimension == 1:
            vals = _kernels.mayer_product_batch(x[:, :, 0], edges_i, edges_j,
                                                params)
        else:
            r = np.linalg.norm(x[:, edges_i, :] - x[:, edges_j, :], axis=2)
            fvals = np.expm1(-beta * np.vectorize(potential.v_radial)(r)) \
                if potential.kind == "tabulated-radial" else None
            # generic radial evaluation without per-sample python: use the
            # kernel parametrization on radii
            kind, a, R, fwell, tr, tf = params
            f = np.zeros_like(r)
            f[r < a] = -1.0
            mid = (r >= a) & (r < R)
            if kind == _kernels.KIND_SQUARE_WELL:
                f[mid] = fwell
            elif kind == _kernels.KIND_TABULATED:
                f[mid] = np.interp(r[mid], tr, tf)
            vals = np.prod(f, axis=1)
            del fvals
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals ** 2))
        done += m
    mean = total / samples
    var = max(0.0, total_sq / samples - mean ** 2)
    return volume * mean, volume * np.sqrt(var / samples)


# ---------------------------------------------------------------------------
# piecewise polynomials (ordered-sector convolution oracle)
# ---------------------------------------------------------------------------

class PiecewisePoly:
    """Function on [breaks[0], breaks[-1]] stored as per-piece Legendre
    series, fitted from Gauss-Legendre samples (exact for polynomials)."""

    def __init__(self, breaks: np.ndarray, coeffs: list[np.ndarray]):
        self.breaks = np.asarray(breaks, dtype=float)
        self.coeffs = coeffs

    @classmethod
    def fit(cls, fn, breaks, points: int = 64) -> "PiecewisePoly":
        breaks = np.asarray(sorted(set(float(b) for b in breaks)))
        coeffs = []
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            x, _ = gauss_nodes(points, lo, hi)
            y = fn(x)
            t = (2.0 * x - (lo + hi)) / (hi - lo)
            deg = min(points - 1, 48)
            coeffs.append(np.polynomial.legendre.legfit(t, y, deg))
        return cls(breaks, coeffs)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1,
                      0, len(self.coeffs) - 1)
        for p in range(len(self.coeffs)):
            sel = idx == p
            if not np.any(sel):
                continue
            lo, hi = self.breaks[p], self.breaks[p + 1]
            t = (2.0 * x[sel] - (lo + hi)) / (hi - lo)
            out[sel] = np.polynomial.legendre.legval(t, self.coeffs[p])
        inside = (x >= self.breaks[0]) & (x <= self.breaks[-1])
        out[~inside] = 0.0
        return out

    def integrate_against(self, weight_fn, weight_breaks, lo, hi,
                          points: int = 64) -> float:
        xs, ws = piecewise_nodes(lo, hi, list(weight_breaks) + list(self.breaks),
                                 points)
        return float(np.sum(ws * weight_fn(xs) * self(xs)))


def convolve(weight_fn, weight_breaks, w_poly: PiecewisePoly, hi: float,
             points: int = 64) -> PiecewisePoly:
    """(weight * w_poly)(s) = int_0^s weight(t) w_poly(s - t) dt on [0, hi]."""
    new_breaks = {0.0, hi}
    for bw in weight_breaks:
        for bW in w_poly.breaks:
            s = float(bw + bW)
            if 0.0 < s < hi:
                new_breaks.add(s)
        if 0.0 < bw < hi:
            new_breaks.add(float(bw))

    def value(s_arr):
        out = np.zeros_like(s_arr)
        for idx, s in enumerate(np.asarray(s_arr, dtype=float)):
            if s <= 0:
                continue
            raw = list(weight_breaks) + [s - b for b in w_poly.breaks]
            ts, ws = piecewise_nodes(0.0, s, raw, points)
            out[idx] = np.sum(ws * weight_fn(ts) * w_poly(s - ts))
        return out

    return PiecewisePoly.fit(value, sorted(new_breaks), points)
