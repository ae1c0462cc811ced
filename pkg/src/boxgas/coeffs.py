"""Irreducible Mayer coefficients and their finite-volume counterparts.

Four routes produce a ClusterTable:

* two-connected graph integrals over the box (default finite-volume mode),
* the abstract polymer sum with interaction-graph weights (cross-check
  mode, truncated in total multiplicity),
* whole-line two-connected integrals with one vertex pinned (infinite
  volume),
* a linear solve against exact/high-precision log Z values ("oracle fit"):
  the falling polynomial makes the canonical series finite at fixed N, so
  with values for N = 2..n_max+1 the system is triangular and the fit is
  exact up to rounding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from itertools import combinations, combinations_with_replacement
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import (ArgumentError, CapacityError, ConvergenceError,
                     FitError, InsufficientDataError)
from .graphs import N_GRAPH_MAX, enumerate_graphs
from .potentials import PairPotential, c_beta, default_c0
from .quadrature import (box_graph_integral, mc_graph_integral,
                         pinned_graph_integral)
from .thermo import SimulationRegion, p_poly, stirling_s

N_POLY_MAX = 3

TABLE_SCHEMA_VERSION = 1

MODES = ("polymer-exact", "two-connected-integral", "infinite-volume",
         "oracle-fitted")


@dataclass
class IntegrationConfig:
    """Quadrature/MC knobs; a fixed seed makes results bit-reproducible."""

    scheme: str = "tensor-quadrature"
    points: int = 16
    mc_samples: int = 400_000
    seed: int = 0
    tolerance: float = 1e-8
    quad_n_cap: int = 2     # highest order integrated by the exact cascade


@dataclass
class ClusterTable:
    """Coefficients B(n), n = 1..n_max, with uncertainties and provenance."""

    beta: float
    region: SimulationRegion | None      # None marks the infinite-volume table
    n_max: int
    values: np.ndarray
    uncertainty: np.ndarray
    mode: str
    tail_c: float | None = None          # fitted amplitude C of |F(n)| <= C e^{-cn}
    tail_rate: float | None = None       # fitted rate c
    c_beta_value: float | None = None
    c0: float | None = None
    stability_b: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.uncertainty = np.asarray(self.uncertainty, dtype=float)
        if self.mode not in MODES:
            raise ArgumentError(f"unknown table mode {self.mode!r}")
        if len(self.values) != self.n_max or len(self.uncertainty) != self.n_max:
            raise ArgumentError("values/uncertainty must have length n_max")
        if np.any(self.uncertainty < 0):
            raise ArgumentError("uncertainties must be >= 0")

    def with_tail(self, tail_c: float, tail_rate: float) -> "ClusterTable":
        return replace(self, tail_c=tail_c, tail_rate=tail_rate)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema_version": TABLE_SCHEMA_VERSION,
            "beta": self.beta,
            "region": (None if self.region is None else
                       {"dimension": self.region.dimension,
                        "side": self.region.side}),
            "n_max": self.n_max,
            "values": self.values.tolist(),
            "uncertainty": self.uncertainty.tolist(),
            "mode": self.mode,
            "tail_c": self.tail_c,
            "tail_rate": self.tail_rate,
            "c_beta_value": self.c_beta_value,
            "c0": self.c0,
            "stability_b": self.stability_b,
            "seed": self.seed,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClusterTable":
        doc = json.loads(text)
        if doc.get("schema_version") != TABLE_SCHEMA_VERSION:
            raise ArgumentError("unsupported table schema version")
        region = doc["region"]
        return cls(
            beta=doc["beta"],
            region=None if region is None else
            SimulationRegion(region["dimension"], region["side"]),
            n_max=doc["n_max"],
            values=np.array(doc["values"]),
            uncertainty=np.array(doc["uncertainty"]),
            mode=doc["mode"],
            tail_c=doc.get("tail_c"),
            tail_rate=doc.get("tail_rate"),
            c_beta_value=doc.get("c_beta_value"),
            c0=doc.get("c0"),
            stability_b=doc.get("stability_b", 0.0),
            seed=doc.get("seed", 0),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ClusterTable":
        return cls.from_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# graph-sum coefficients
# ---------------------------------------------------------------------------

def _check_order(n: int) -> None:
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if n > N_GRAPH_MAX - 1:
        raise CapacityError(f"n={n} beyond the graph cap {N_GRAPH_MAX - 1}")


def beta_n_infinite(potential: PairPotential, beta: float, n: int,
                    cfg: IntegrationConfig | None = None):
    """Infinite-volume coefficient: (1/n!) sum over biconnected graphs on
    n+1 vertices of the pinned whole-line Mayer-product integral.

    Orders up to cfg.quad_n_cap use the exact cascade; higher orders fall
    back to seeded Monte Carlo.  Returns (value, uncertainty)."""
    cfg = cfg or IntegrationConfig()
    _check_order(n)
    if potential.kind == "zero":
        return 0.0, 0.0
    family = enumerate_graphs(n + 1, "biconnected")
    use_quad = (cfg.scheme == "tensor-quadrature" and n <= cfg.quad_n_cap)
    total, var = 0.0, 0.0
    total_lo = 0.0
    # the MC budget is shared across the family so runtime stays O(samples)
    per_graph = max(1000, cfg.mc_samples // len(family))
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(family))
    for idx, g in enumerate(family):
        edges = g.edges()
        if use_quad:
            total += pinned_graph_integral(potential, beta, edges, n + 1,
                                           points=cfg.points)
            total_lo += pinned_graph_integral(potential, beta, edges, n + 1,
                                              points=max(6, cfg.points // 2))
        else:
            val, err = mc_graph_integral(
                potential, beta, edges, n + 1, dimension=1,
                samples=per_graph,
                seed=seeds[idx].generate_state(1)[0])
            total += val
            var += err ** 2
    norm = math.factorial(n)
    if use_quad:
        return total / norm, abs(total - total_lo) / norm
    return total / norm, math.sqrt(var) / norm


def b_lambda_2connected(potential: PairPotential, beta: float,
                        region: SimulationRegion, n: int,
                        cfg: IntegrationConfig | None = None):
    """Finite-volume coefficient: the same biconnected sum with every
    coordinate in the box and one overall volume factor removed.
    Converges to the infinite-volume value as the box grows."""
    cfg = cfg or IntegrationConfig()
    _check_order(n)
    if potential.kind == "zero":
        return 0.0, 0.0
    if region.dimension != 1:
        raise CapacityError("finite-volume quadrature is d=1 only; "
                            "use Monte Carlo tables for d >= 2")
    family = enumerate_graphs(n + 1, "biconnected")
    use_quad = n + 1 <= cfg.quad_n_cap + 1
    total, var, total_lo = 0.0, 0.0, 0.0
    per_graph = max(1000, cfg.mc_samples // len(family))
    seeds = np.random.SeedSequence(cfg.seed + 1).spawn(len(family))
    for idx, g in enumerate(family):
        edges = g.edges()
        if use_quad:
            total += box_graph_integral(potential, beta, region.side, edges,
                                        n + 1, points=cfg.points)
            total_lo += box_graph_integral(potential, beta, region.side,
                                           edges, n + 1,
                                           points=max(6, cfg.points // 2))
        else:
            val, err = mc_graph_integral(
                potential, beta, edges, n + 1, dimension=1,
                samples=per_graph,
                seed=seeds[idx].generate_state(1)[0],
                box_side=region.side)
            total += val
            var += err ** 2
    norm = math.factorial(n) * region.volume
    if use_quad:
        return total / norm, abs(total - total_lo) / norm
    return total / norm, math.sqrt(var) / norm


# ---------------------------------------------------------------------------
# abstract polymer route
# ---------------------------------------------------------------------------

def _omega(potential: PairPotential, beta: float, region: SimulationRegion,
           size: int, cfg: IntegrationConfig, cache: dict) -> float:
    """Connected-graph activity of a polymer with `size` points: the sum of
    box integrals over connected graphs, normalized by volume^size."""
    if size in cache:
        return cache[size]
    family = enumerate_graphs(size, "connected")
    total = 0.0
    seeds = np.random.SeedSequence(cfg.seed + 97 * size).spawn(len(family))
    for idx, g in enumerate(family):
        edges = g.edges()
        if size <= cfg.quad_n_cap + 1:
            total += box_graph_integral(potential, beta, region.side, edges,
                                        size, points=cfg.points)
        else:
            val, _ = mc_graph_integral(potential, beta, edges, size,
                                       dimension=1, samples=cfg.mc_samples,
                                       seed=seeds[idx].generate_state(1)[0],
                                       box_side=region.side)
            total += val
    cache[size] = total / region.volume ** size
    return cache[size]


def _spanning_connected_sum(n_vertices: int, edge_list) -> int:
    """Sum over connected spanning subgraphs of (-1)^{#edges}."""
    total = 0
    m = len(edge_list)
    for sub in range(1 << m):
        adj = [set() for _ in range(n_vertices)]
        n_edges = 0
        for e in range(m):
            if (sub >> e) & 1:
                i, j = edge_list[e]
                adj[i].add(j)
                adj[j].add(i)
                n_edges += 1
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) == n_vertices:
            total += (-1) ** n_edges
    return total


def _multi_index_weight(polymers: tuple) -> float:
    """c_I for the multiset of polymers: (1/I!) times the signed sum over
    connected spanning subgraphs of the incompatibility graph (copies of
    the same polymer are mutually incompatible)."""
    k = len(polymers)
    edge_list = [(i, j) for i in range(k) for j in range(i + 1, k)
                 if polymers[i] & polymers[j]]
    signed = _spanning_connected_sum(k, edge_list)
    if signed == 0:
        return 0.0
    i_fact = 1
    for p in set(polymers):
        i_fact *= math.factorial(polymers.count(p))
    return signed / i_fact


def b_lambda_polymer(potential: PairPotential, beta: float,
                     region: SimulationRegion, n: int,
                     cfg: IntegrationConfig | None = None,
                     max_total_multiplicity: int = 4):
    """Polymer-sum coefficient: (V^n / n!) sum over multi-indices I with
    support union [n+1] of c_I prod omega(V)^{I(V)}.

    The multi-index sum is truncated at total multiplicity
    max_total_multiplicity (the combinatorics explode beyond that); with
    max_total_multiplicity=1 the n=1 value reduces to exactly the same
    double integral as the two-connected mode."""
    cfg = cfg or IntegrationConfig()
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if n > N_POLY_MAX:
        raise CapacityError(f"polymer mode capped at n={N_POLY_MAX}")
    if potential.kind == "zero":
        return 0.0, 0.0
    vertices = frozenset(range(n + 1))
    polymer_list = [frozenset(c)
                    for size in range(2, n + 2)
                    for c in combinations(range(n + 1), size)]
    omega_cache: dict[int, float] = {}
    total = 0.0
    for t in range(1, max_total_multiplicity + 1):
        for multi in combinations_with_replacement(polymer_list, t):
            union = frozenset().union(*multi)
            if union != vertices:
                continue
            c_i = _multi_index_weight(multi)
            if c_i == 0.0:
                continue
            w = 1.0
            for p in multi:
                w *= _omega(potential, beta, region, len(p), cfg, omega_cache)
            total += c_i * w
    value = region.volume ** n / math.factorial(n) * total
    return value, 0.0


# ---------------------------------------------------------------------------
# oracle fit and decay fit
# ---------------------------------------------------------------------------

def fit_coefficients_from_oracle(log_z_values, region: SimulationRegion,
                                 beta: float, n_max: int,
                                 cond_threshold: float = 1e12,
                                 potential: PairPotential | None = None
                                 ) -> ClusterTable:
    """Solve for B(n), n = 1..n_max, from log Z(N), N = 1..N_fit.

    log_z_values[i] is log Z(i+1).  Needs N_fit >= n_max + 1; the design
    matrix row for N only touches n < N, so the square case is triangular
    and exact.  The residual of the overdetermined solve is reported via
    the returned table's uncertainty column (absolute, per-coefficient
    least-squares sense)."""
    log_z = np.asarray(log_z_values, dtype=float)
    n_fit = log_z.size
    if n_fit < n_max + 1:
        raise ArgumentError("need N_fit >= n_max + 1 oracle values")
    V = region.volume
    rows = []
    rhs = []
    for N in range(2, n_fit + 1):
        free_part = N * math.log(V) - float(gammaln(N + 1))
        rhs.append(log_z[N - 1] - free_part)
        rows.append([N * p_poly(N, V, n) / (n + 1)
                     for n in range(1, n_max + 1)])
    a = np.array(rows)
    b = np.array(rhs)
    cond = np.linalg.cond(a)
    if cond > cond_threshold:
        raise FitError(f"fit matrix condition number {cond:.2e} too large")
    coeffs, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.linalg.norm(a @ coeffs - b))
    table = ClusterTable(
        beta=beta, region=region, n_max=n_max, values=coeffs,
        uncertainty=np.full(n_max, residual), mode="oracle-fitted",
        stability_b=potential.stability_b if potential else 0.0)
    if potential is not None:
        cb, _ = c_beta(potential, beta, region.dimension)
        table.c_beta_value = cb
        table.c0 = default_c0(beta, potential.stability_b)
    return table


@dataclass
class DecayFit:
    amplitude: float        # C in |F(n)| <= C e^{-c n}
    rate: float             # c
    violation: bool
    n_used: int
    log_residual: float
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))


def decay_fit(table: ClusterTable, rho_reference: float,
              c_min: float = 1.0) -> DecayFit:
    """Least-squares fit of log|F(n)| against n at the reference density.

    F(n) is assembled from the table through the falling polynomial at
    N = rho * V (the infinite-volume table uses the rho^n limit).  The
    violation flag marks a convergence-window breach: fitted rate <= c_min
    (default 1.0 = -log of the default condition constant at B = 0) or any
    non-decreasing step."""
    if table.region is not None:
        V = table.region.volume
        N_ref = rho_reference * V
        f_vals = np.array([p_poly(N_ref, V, n) * table.values[n - 1] / (n + 1)
                           for n in range(1, table.n_max + 1)])
    else:
        f_vals = np.array([rho_reference ** n * table.values[n - 1] / (n + 1)
                           for n in range(1, table.n_max + 1)])
    mask = np.abs(f_vals) > 0
    if mask.sum() < 3:
        raise InsufficientDataError(
            f"decay fit needs >= 3 nonzero coefficients, got {int(mask.sum())}")
    ns = np.arange(1, table.n_max + 1)[mask]
    logs = np.log(np.abs(f_vals[mask]))
    slope, intercept = np.polyfit(ns, logs, 1)
    resid = float(np.linalg.norm(logs - (slope * ns + intercept)))
    rate = -slope
    ratios = np.abs(f_vals[mask][1:] / f_vals[mask][:-1])
    violation = bool(rate <= c_min or np.any(ratios >= 1.0))
    if rate <= 0:
        raise ConvergenceError(
            f"coefficient sequence does not decay (fitted rate {rate:.3f})")
    return DecayFit(amplitude=float(np.exp(intercept)), rate=float(rate),
                    violation=violation, n_used=int(mask.sum()),
                    log_residual=resid, ratios=ratios)


# ---------------------------------------------------------------------------
# infinite-volume coefficients from an equation-of-state fit
# ---------------------------------------------------------------------------

def fit_beta_n_from_eos(log_z_of_NL, beta: float, n_max: int,
                        base_side: float = 1000.0) -> np.ndarray:
    """Recover the infinite-volume coefficients from an exact log Z oracle.

    At each of three box sizes (base, 2x, 4x) the finite-volume
    coefficients come out of the exact triangular solve against log Z for
    N = 1..n_max+1; their finite-size error is analytic in inverse volume,
    so a three-point Richardson solve per order removes the 1/V and 1/V^2
    terms and leaves O(V^-3).  Independent of the graph-integral route."""
    sides = [base_side, 2.0 * base_side, 4.0 * base_side]
    per_side = []
    for side in sides:
        region = SimulationRegion(1, side)
        log_z = [log_z_of_NL(N, side) for N in range(1, n_max + 2)]
        per_side.append(
            fit_coefficients_from_oracle(log_z, region, beta, n_max).values)
    inv = np.array([1.0 / s for s in sides])
    vander = np.column_stack([np.ones(3), inv, inv ** 2])
    out = np.empty(n_max)
    for n in range(n_max):
        coeffs = np.linalg.solve(vander, [per_side[i][n] for i in range(3)])
        out[n] = coeffs[0]
    return out


def virial_pressure_coefficients(beta_n: np.ndarray) -> np.ndarray:
    """Pressure-series coefficients c_n with beta p = rho + sum c_n rho^(n+1),
    i.e. c_n = -n beta_n / (n+1)."""
    ns = np.arange(1, len(beta_n) + 1)
    return -ns * np.asarray(beta_n) / (ns + 1)


def eos_pressure_residual(beta_n: np.ndarray, rho: float,
                          beta_p: float) -> float:
    """How far an observed (rho, beta p) pair sits from the truncated
    pressure series built on the fitted coefficients."""
    c = virial_pressure_coefficients(beta_n)
    series = rho + sum(cn * rho ** (n + 2) for n, cn in enumerate(c))
    return abs(beta_p - series)


# ---------------------------------------------------------------------------
# table construction
# ---------------------------------------------------------------------------

def _attach_decay(table: ClusterTable) -> ClusterTable:
    """Fit and stamp the tail constants when the table supports it; tables
    without three nonzero coefficients (the zero potential) stay as-is."""
    if table.region is not None:
        rho_ref = min(0.9, (table.n_max + 1.5) / table.region.volume)
        rho_ref = max(rho_ref, (table.n_max + 1.01) / table.region.volume)
    else:
        rho_ref = 0.1
    try:
        fit = decay_fit(table, rho_ref)
    except (InsufficientDataError, ConvergenceError):
        return table
    table.tail_c = fit.amplitude
    table.tail_rate = fit.rate
    return table


def build_table(potential: PairPotential, beta: float,
                region: SimulationRegion | None, n_max: int,
                cfg: IntegrationConfig | None = None,
                mode: str = "two-connected-integral",
                z_source=None) -> ClusterTable:
    """Assemble a ClusterTable in the requested mode, stamped with the
    regularity integral, the condition constant and the decay-fit tail."""
    cfg = cfg or IntegrationConfig()
    values = np.zeros(n_max)
    errors = np.zeros(n_max)
    if mode == "oracle-fitted":
        if z_source is None:
            raise ArgumentError("oracle-fitted mode needs a z_source")
        log_z = [z_source(N) for N in range(1, n_max + 2)]
        table = fit_coefficients_from_oracle(log_z, region, beta, n_max,
                                             potential=potential)
        table.seed = cfg.seed
        return _attach_decay(table)
    for n in range(1, n_max + 1):
        if mode == "infinite-volume" or region is None:
            values[n - 1], errors[n - 1] = beta_n_infinite(potential, beta,
                                                           n, cfg)
        elif mode == "two-connected-integral":
            values[n - 1], errors[n - 1] = b_lambda_2connected(
                potential, beta, region, n, cfg)
        elif mode == "polymer-exact":
            values[n - 1], errors[n - 1] = b_lambda_polymer(
                potential, beta, region, n, cfg)
        else:
            raise ArgumentError(f"unknown mode {mode!r}")
    dim = region.dimension if region is not None else 1
    cb = 0.0 if potential.kind == "zero" else c_beta(potential, beta, dim)[0]
    table = ClusterTable(
        beta=beta,
        region=None if mode == "infinite-volume" else region,
        n_max=n_max, values=values, uncertainty=errors,
        mode="infinite-volume" if region is None else mode,
        c_beta_value=cb, c0=default_c0(beta, potential.stability_b),
        stability_b=potential.stability_b, seed=cfg.seed)
    return _attach_decay(table)
