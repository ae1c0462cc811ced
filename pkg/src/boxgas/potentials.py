"""Pair potentials, the Mayer function, and the low-density condition.

All potentials are radial and finite range: V(x) = 0 for |x| > R.  A hard
core is represented by +inf inside |x| < a, and e^{-beta*inf} - 1
evaluates to exactly -1 so there is no overflow path at the core
boundary.  Instances are frozen dataclasses and safe to share between
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ArgumentError, IntegrationError

KINDS = ("zero", "hard-core", "square-well", "tabulated-radial")

_EMPTY = np.zeros(0)


@dataclass(frozen=True)
class PairPotential:
    """A stable, regular, even pair interaction.

    kind            one of 'zero', 'hard-core', 'square-well', 'tabulated-radial'
    hard_core       core radius a >= 0 (V = +inf for |x| < a)
    interaction_range   R with V(x) = 0 for |x| > R
    well_depth      epsilon > 0 for the square well (V = -epsilon on [a, R))
    stability_b     a constant B >= 0 with sum_{i<j} V(x_i-x_j) >= -B n
    table_r/table_v samples (radius -> energy) for the tabulated kind
    """

    kind: str
    hard_core: float = 0.0
    interaction_range: float = 0.0
    well_depth: float = 0.0
    stability_b: float = 0.0
    table_r: np.ndarray = field(default_factory=lambda: _EMPTY)
    table_v: np.ndarray = field(default_factory=lambda: _EMPTY)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown potential kind {self.kind!r}")
        if self.hard_core < 0 or self.interaction_range < 0:
            raise ArgumentError("radii must be >= 0")
        if self.stability_b < 0:
            raise ArgumentError("stability constant must be >= 0")
        if self.kind == "tabulated-radial" and len(self.table_r) < 2:
            raise ArgumentError("tabulated potential needs >= 2 samples")

    # -- radial evaluation ------------------------------------------------

    def v_radial(self, r):
        """Potential value at radius r (scalar or array); +inf in the core."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if self.kind == "zero":
            return out if out.ndim else float(out)
        core = r < self.hard_core
        out[core] = np.inf
        mid = (~core) & (r < self.interaction_range)
        if self.kind == "square-well":
            out[mid] = -self.well_depth
        elif self.kind == "tabulated-radial":
            out[mid] = np.interp(r[mid], self.table_r, self.table_v)
        return out if out.ndim else float(out)

    def mayer_params(self, beta: float):
        """Flattened (kind, a, R, fwell, table_r, table_f) for the kernels."""
        kind = {"zero": _kernels.KIND_ZERO,
                "hard-core": _kernels.KIND_HARD_CORE,
                "square-well": _kernels.KIND_SQUARE_WELL,
                "tabulated-radial": _kernels.KIND_TABULATED}[self.kind]
        fwell = math.expm1(beta * self.well_depth) if self.kind == "square-well" else 0.0
        if self.kind == "tabulated-radial":
            tr = np.asarray(self.table_r, dtype=float)
            tf = np.expm1(-beta * np.asarray(self.table_v, dtype=float))
            tf = np.where(np.isinf(self.table_v), -1.0, tf)
        else:
            tr, tf = _EMPTY, _EMPTY
        return (kind, float(self.hard_core), float(self.interaction_range),
                fwell, tr, tf)

    def v_params(self):
        """Flattened raw-potential parameters for the Boltzmann kernel."""
        kind = {"zero": _kernels.KIND_ZERO,
                "hard-core": _kernels.KIND_HARD_CORE,
                "square-well": _kernels.KIND_SQUARE_WELL,
                "tabulated-radial": _kernels.KIND_TABULATED}[self.kind]
        vwell = -self.well_depth if self.kind == "square-well" else 0.0
        tr = np.asarray(self.table_r, dtype=float) if self.kind == "tabulated-radial" else _EMPTY
        tv = np.asarray(self.table_v, dtype=float) if self.kind == "tabulated-radial" else _EMPTY
        return (kind, float(self.hard_core), float(self.interaction_range),
                vwell, tr, tv)

    def attractive_depth(self) -> float:
        """Largest attractive depth, bounding the Mayer function above."""
        if self.kind == "square-well":
            return self.well_depth
        if self.kind == "tabulated-radial" and len(self.table_v):
            finite = self.table_v[np.isfinite(self.table_v)]
            return float(max(0.0, -finite.min())) if len(finite) else 0.0
        return 0.0

    def radial_breakpoints(self) -> np.ndarray:
        """Radii where the potential is allowed to be non-smooth."""
        pts = {0.0, self.hard_core, self.interaction_range}
        if self.kind == "tabulated-radial":
            pts.update(float(r) for r in self.table_r)
        return np.array(sorted(p for p in pts if p >= 0.0))


def zero_potential() -> PairPotential:
    return PairPotential(kind="zero")


def hard_rod(a: float) -> PairPotential:
    """Pure hard core of radius a (the Tonks interaction at d = 1)."""
    return PairPotential(kind="hard-core", hard_core=a, interaction_range=a)


def square_well(a: float, r_range: float, depth: float,
                stability_b: float | None = None) -> PairPotential:
    """Hard core a plus attractive well of the given depth out to r_range.

    The default stability constant is the 1D bound depth*ceil(R/a): with a
    hard core, at most ceil(R/a) particles fit on each side within range.
    """
    if r_range < a:
        raise ArgumentError("well range must be >= hard core")
    if stability_b is None:
        stability_b = depth * math.ceil(r_range / a - 1e-12) if a > 0 else np.inf
    return PairPotential(kind="square-well", hard_core=a,
                         interaction_range=r_range, well_depth=depth,
                         stability_b=stability_b)


def tabulated(table_r, table_v, hard_core=0.0, stability_b=0.0) -> PairPotential:
    table_r = np.asarray(table_r, dtype=float)
    table_v = np.asarray(table_v, dtype=float)
    return PairPotential(kind="tabulated-radial", hard_core=hard_core,
                         interaction_range=float(table_r.max()),
                         stability_b=stability_b,
                         table_r=table_r, table_v=table_v)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def evaluate(potential: PairPotential, displacement, expected_dim: int | None = None):
    """V at the given displacement (scalar radius or a d-vector)."""
    x = np.atleast_1d(np.asarray(displacement, dtype=float))
    if x.ndim != 1:
        raise ArgumentError("displacement must be a scalar or 1-D vector")
    if expected_dim is not None and x.size != expected_dim:
        raise ArgumentError(
            f"displacement has dimension {x.size}, expected {expected_dim}")
    return potential.v_radial(float(np.linalg.norm(x)))


def mayer_f(potential: PairPotential, beta: float, displacement,
            expected_dim: int | None = None) -> float:
    """f(x) = e^{-beta V(x)} - 1; exactly -1 inside a hard core."""
    if beta <= 0:
        raise ArgumentError("beta must be positive")
    v = evaluate(potential, displacement, expected_dim)
    if np.isinf(v):
        return -1.0
    return math.expm1(-beta * v)


def mayer_f_radial(potential: PairPotential, beta: float, r):
    """Vectorized Mayer function of the radius."""
    v = potential.v_radial(np.asarray(r, dtype=float))
    out = np.expm1(-beta * np.asarray(v))
    return np.where(np.isinf(v), -1.0, out)


_SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def c_beta(potential: PairPotential, beta: float, dimension: int = 1,
           points: int = 64, tolerance: float = 1e-9):
    """Integral of |e^{-beta V(x)} - 1| over R^d, by split radial quadrature.

    Splits at the potential's breakpoints so the integrand is smooth on
    each piece; the reported error is the difference against a half-order
    rule.  Raises IntegrationError when that estimate exceeds tolerance.
    """
    if beta <= 0:
        raise ArgumentError("beta must be positive")
    if dimension not in _SURFACE:
        raise ArgumentError("dimension must be 1, 2 or 3")
    if potential.kind == "zero":
        return 0.0, 0.0
    R = potential.interaction_range
    if not np.isfinite(R) or R <= 0:
        raise ArgumentError("potential must have a positive finite range")
    breaks = [b for b in potential.radial_breakpoints() if b <= R]
    if breaks[-1] < R:
        breaks.append(R)
    surface = _SURFACE[dimension]

    def run(p):
        nodes, weights = np.polynomial.legendre.leggauss(p)
        total = 0.0
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            if hi - lo <= 0:
                continue
            r = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * weights
            fr = np.abs(mayer_f_radial(potential, beta, r))
            total += float(np.sum(w * fr * r ** (dimension - 1)))
        return surface * total

    value = run(points)
    err = abs(value - run(max(4, points // 2)))
    if err > tolerance * max(1.0, abs(value)):
        raise IntegrationError(
            f"c_beta quadrature error {err:.3e} above tolerance {tolerance:.1e}")
    return value, err


def default_c0(beta: float, stability_b: float) -> float:
    """Convergence constant e^{-2 beta B - 1} used by the density condition."""
    return math.exp(-2.0 * beta * stability_b - 1.0)


def check_condition_star(rho: float, c_beta_value: float, c0: float):
    """Low-density check rho * C(beta) < c0; returns (ok, ratio)."""
    if rho < 0:
        raise ArgumentError("density must be >= 0")
    if c0 <= 0:
        raise ArgumentError("c0 must be positive")
    ratio = rho * c_beta_value / c0
    return ratio < 1.0, ratio


def validate_stability(potential: PairPotential, dimension: int = 1,
                       n_max: int = 6, samples: int = 200,
                       seed: int = 0) -> float:
    """Sample small configurations and check H >= -B n; returns the worst
    margin min(H + B n) found (negative would be a violation)."""
    rng = np.random.default_rng(seed)
    span = max(potential.interaction_range, potential.hard_core, 1.0)
    worst = np.inf
    for n in range(2, n_max + 1):
        x = rng.uniform(-n * span, n * span, size=(samples, n, dimension))
        h = np.zeros(samples)
        for i in range(n):
            for j in range(i + 1, n):
                r = np.linalg.norm(x[:, i, :] - x[:, j, :], axis=1)
                h += potential.v_radial(r)
        margin = np.min(h + potential.stability_b * n)
        worst = min(worst, float(margin))
    return worst
