"""Exact and brute-force reference computations.

Everything downstream is validated against these: the closed-form hard-rod
partition function, a direct quadrature of Z_N that shares nothing with the
closed form, exact grand-canonical probabilities via stable log-domain sums,
and characteristic-function inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _kernels
from .errors import ArgumentError, CapacityError, IntegrationError
from .potentials import PairPotential
from .quadrature import PiecewisePoly, convolve, piecewise_nodes
from .thermo import SimulationRegion, stability_n_max


@dataclass
class OracleResult:
    value: float            # log-domain where applicable
    method: str             # closed-form | quadrature | monte-carlo | char-fn-inversion
    error: float = 0.0      # standard error / quadrature estimate; 0 for closed form
    seed: int | None = None

    def __post_init__(self):
        if self.error < 0:
            raise ArgumentError("error estimate must be >= 0")


def tonks_log_z(N: int, L: float, a: float) -> float:
    """log Z for N hard rods of core a with centers in [0, L].

    Closed form N log(L - (N-1)a) - log N!; infeasible packings return
    -inf.  The formula is itself cross-checked against quadrature_log_z
    before the suite trusts it (see tests).
    """
    if N < 0:
        raise ArgumentError("N must be >= 0")
    if N == 0:
        return 0.0
    free = L - (N - 1) * a
    if free <= 0.0:
        return -math.inf
    return N * math.log(free) - float(gammaln(N + 1))


N_QUAD_MAX = {1: 6, 2: 4}


def _gap_weight(potential: PairPotential, beta: float):
    """Nearest-neighbour gap weight w(t) = e^{-beta V(t)} and its breaks."""
    def w(t):
        v = potential.v_radial(np.asarray(t, dtype=float))
        out = np.exp(-beta * np.where(np.isinf(v), 0.0, v))
        out[np.isinf(v)] = 0.0
        return out

    breaks = [b for b in potential.radial_breakpoints() if b > 0]
    return w, breaks


def _quadrature_log_z_1d(potential: PairPotential, beta: float, L: float,
                         N: int, points: int = 64) -> float:
    """Ordered-sector evaluation of Z_N at d = 1.

    In gap coordinates the Boltzmann factor factorizes over nearest
    neighbours when R <= 2a (farther pairs are separated by more than R
    whenever no factor already vanishes), so Z_N is an iterated 1D
    convolution of the gap weight -- per-piece Gauss-Legendre throughout,
    exact for piecewise-polynomial weights.
    """
    if N == 0:
        return 0.0
    if N == 1:
        return math.log(L)
    w, wbreaks = _gap_weight(potential, beta)
    conv = PiecewisePoly.fit(lambda t: w(t), [0.0] + wbreaks + [L], points)
    for _ in range(N - 2):
        conv = convolve(w, wbreaks, conv, L, points)
    # integrate (L - s) * W_{N-1}(s) over [0, L]
    xs, ws = piecewise_nodes(0.0, L, list(conv.breaks), points)
    total = float(np.sum(ws * (L - xs) * conv(xs)))
    if total <= 0.0:
        return -math.inf
    return math.log(total)


def _quadrature_log_z_mc(potential: PairPotential, beta: float,
                         region: SimulationRegion, N: int,
                         samples: int, seed: int):
    rng = np.random.default_rng(seed)
    d = region.dimension
    vparams = potential.v_params()
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(200_000, samples - done)
        x = rng.uniform(0.0, region.side, size=(m, N * d))
        vals = _kernels.boltzmann_batch(x, d, beta, vparams)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals ** 2))
        done += m
    mean = total / samples
    var = max(0.0, total_sq / samples - mean ** 2)
    rel = math.sqrt(var / samples) / mean if mean > 0 else math.inf
    log_z = (N * math.log(region.volume) - float(gammaln(N + 1))
             + math.log(mean)) if mean > 0 else -math.inf
    return log_z, rel


def quadrature_log_z(potential: PairPotential, beta: float,
                     region: SimulationRegion, N: int,
                     points: int = 64, mc_samples: int = 400_000,
                     seed: int = 0, tolerance: float = 1e-6) -> OracleResult:
    """Direct evaluation of log[(1/N!) int_{Lambda^N} e^{-beta H}].

    d = 1 uses deterministic split quadrature in the ordered sector (valid
    for finite-range potentials with R <= 2a); other cases use seeded
    Monte Carlo with a reported relative 3-sigma error.
    """
    d = region.dimension
    cap = N_QUAD_MAX.get(d, 0)
    if N > cap:
        raise CapacityError(f"N={N} above the quadrature cap {cap} at d={d}")
    if N < 0:
        raise ArgumentError("N must be >= 0")
    if potential.kind == "zero":
        value = N * math.log(region.volume) - float(gammaln(N + 1))
        return OracleResult(value=value, method="quadrature", error=0.0)
    reducible = (potential.interaction_range
                 <= 2.0 * potential.hard_core + 1e-12)
    if d == 1 and reducible:
        v1 = _quadrature_log_z_1d(potential, beta, region.side, N, points)
        v2 = _quadrature_log_z_1d(potential, beta, region.side, N,
                                  max(16, points // 2))
        err = abs(v1 - v2)
        if err > tolerance:
            raise IntegrationError(
                f"quadrature log Z error {err:.2e} above {tolerance:.1e}")
        return OracleResult(value=v1, method="quadrature", error=err)
    log_z, rel = _quadrature_log_z_mc(potential, beta, region, N,
                                      mc_samples, seed)
    if not math.isfinite(log_z):
        raise IntegrationError("Monte Carlo estimate vanished")
    return OracleResult(value=log_z, method="monte-carlo", error=3.0 * rel,
                        seed=seed)


# ---------------------------------------------------------------------------
# grand-canonical probabilities
# ---------------------------------------------------------------------------

def ideal_log_z(region: SimulationRegion):
    def logz(N: int) -> float:
        return N * math.log(region.volume) - float(gammaln(N + 1))
    return logz


def tonks_log_z_source(region: SimulationRegion, a: float):
    def logz(N: int) -> float:
        return tonks_log_z(N, region.side, a)
    return logz


def probability_vector(beta: float, region: SimulationRegion, mu0: float,
                       z_source, stability_b: float = 0.0,
                       floor_log: float = -30.0) -> np.ndarray:
    """Normalized P(N), N = 0..N_max, from log-domain tilted weights."""
    n_max = stability_n_max(beta, mu0, stability_b, region.volume,
                            floor_log=floor_log)
    logw = np.array([beta * mu0 * N + z_source(N) for N in range(n_max + 1)])
    logw -= logsumexp(logw)
    return np.exp(logw)


def exact_prob(potential: PairPotential, beta: float,
               region: SimulationRegion, mu0: float, N: int,
               z_source) -> float:
    """P(A_N) = e^{beta mu0 N} Z(N) / Xi, summed stably in log domain.

    Counts beyond the truncation cap report 0.0 (the truncation bound is
    below the e^{-30} weight floor used for the cap)."""
    probs = probability_vector(beta, region, mu0, z_source,
                               stability_b=potential.stability_b)
    if N >= probs.size:
        return 0.0
    return float(probs[N])


def char_fn_invert(probabilities: np.ndarray, N_target: int,
                   oversample: int = 8) -> float:
    """Recover P(N_target) by inverting the characteristic function.

    phi(t) = sum_N P(N) e^{itN} is a trigonometric polynomial, so the
    periodic trapezoid rule on (1/2pi) int e^{-it N} phi(t) dt is exact
    once the grid resolves the top frequency."""
    probs = np.asarray(probabilities, dtype=float)
    n_max = probs.size - 1
    if N_target < 0:
        raise ArgumentError("N_target must be >= 0")
    m = 2 * (n_max + N_target) + oversample
    t = -np.pi + 2.0 * np.pi * np.arange(m) / m
    phi = np.exp(1j * np.outer(t, np.arange(probs.size))) @ probs
    vals = np.exp(-1j * t * N_target) * phi
    return float(np.real(np.mean(vals)))
