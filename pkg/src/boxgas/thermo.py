"""Canonical and grand-canonical thermodynamics from a coefficient table.

All partition-function arithmetic stays in log domain; probabilities only
ever appear as exponentials of differences.  Series evaluations truncate
at the table's n_max and return (value, tail-bound) pairs -- the falling
polynomial kills every order n >= N, so for N <= n_max + 1 the canonical
series is complete and the tail is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import digamma, gammaln, logsumexp

from .errors import ArgumentError, CapacityError

if TYPE_CHECKING:  # pragma: no cover
    from .coeffs import ClusterTable

STIRLING_POLICIES = ("exact-ln-factorial", "gamma-asymptotic")


@dataclass(frozen=True)
class SimulationRegion:
    """The box: dimension d, side l, volume l^d, boundary measure 2d l^(d-1)."""

    dimension: int
    side: float

    def __post_init__(self):
        if self.dimension < 1:
            raise ArgumentError("dimension must be >= 1")
        if self.side <= 0:
            raise ArgumentError("side must be positive")

    @property
    def volume(self) -> float:
        return self.side ** self.dimension

    @property
    def boundary_measure(self) -> float:
        return 2.0 * self.dimension * self.side ** (self.dimension - 1)


@dataclass(frozen=True)
class SeriesValue:
    """A truncated series evaluation with its tail bound and regime flag."""

    value: float
    tail: float = 0.0
    star_warning: bool = False

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# the falling polynomials
# ---------------------------------------------------------------------------

def p_poly(N: float, volume: float, n: int) -> float:
    """(N-1)...(N-n) / volume^n for n < N, else 0."""
    if volume <= 0:
        raise ArgumentError("volume must be positive")
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if not n < N:
        return 0.0
    prod = 1.0
    for k in range(1, n + 1):
        prod *= (N - k) / volume
    return prod


def script_p_poly(rho: float, volume: float, n: int) -> float:
    """rho (rho - 1/V) ... (rho - n/V) for n/V < rho, else 0."""
    if volume <= 0:
        raise ArgumentError("volume must be positive")
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if not n / volume < rho:
        return 0.0
    prod = rho
    for k in range(1, n + 1):
        prod *= rho - k / volume
    return prod


# ---------------------------------------------------------------------------
# Stirling terms
# ---------------------------------------------------------------------------

def _ln_factorial(x: float, policy: str) -> float:
    if policy == "exact-ln-factorial":
        return float(gammaln(x + 1.0))
    # leading Stirling series; kept as an alternative policy only
    return x * math.log(x) - x + 0.5 * math.log(2.0 * math.pi * x) \
        + 1.0 / (12.0 * x)


def stirling_s(rho: float, volume: float,
               policy: str = "exact-ln-factorial") -> float:
    """S = (1/V) log[(rho V)! (e / rho V)^(rho V)], via exact log-gamma."""
    x = rho * volume
    if x < 1.0:
        raise ArgumentError("need rho * volume >= 1")
    return (_ln_factorial(x, policy) + x - x * math.log(x)) / volume


def stirling_s_prime(rho: float, volume: float) -> float:
    """dS/drho = psi(rho V + 1) - log(rho V), the digamma closed form."""
    x = rho * volume
    if x < 1.0:
        raise ArgumentError("need rho * volume >= 1")
    return float(digamma(x + 1.0)) - math.log(x)


def stirling_sandwich(rho: float, volume: float) -> tuple[float, float]:
    """The two-sided bound: low = log sqrt(2 pi rho V)/V, high = low + 1/(12 rho V^2)."""
    x = rho * volume
    low = 0.5 * math.log(2.0 * math.pi * x) / volume
    return low, low + 1.0 / (12.0 * x * volume)


# ---------------------------------------------------------------------------
# the free-energy model
# ---------------------------------------------------------------------------

@dataclass
class FreeEnergyModel:
    """beta + region + coefficient table; evaluates both free energies,
    their derivatives, and the grand-canonical pressure."""

    beta: float
    region: SimulationRegion
    table: "ClusterTable"
    stirling_policy: str = "exact-ln-factorial"
    _poly_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.beta <= 0:
            raise ArgumentError("beta must be positive")
        if self.stirling_policy not in STIRLING_POLICIES:
            raise ArgumentError(f"unknown policy {self.stirling_policy!r}")
        if abs(self.table.beta - self.beta) > 1e-12:
            raise ArgumentError("table beta does not match the model")
        if self.table.region is not None and \
                abs(self.table.region.volume - self.region.volume) > 1e-9:
            raise ArgumentError("table region does not match the model")

    # -- series plumbing ---------------------------------------------------

    @property
    def n_max(self) -> int:
        return self.table.n_max

    def coefficient(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise ArgumentError(f"n={n} outside the table range 1..{self.n_max}")
        return float(self.table.values[n - 1])

    def series_tail_bound(self) -> float:
        """Bound on |sum_{n > n_max} F(n)| from the fitted decay constants."""
        if np.all(np.asarray(self.table.values) == 0.0):
            return 0.0
        c_amp, c_rate = self.table.tail_c, self.table.tail_rate
        if c_amp is not None and c_rate is not None and c_rate > 0:
            q = math.exp(-c_rate)
            return c_amp * q ** (self.n_max + 1) / (1.0 - q)
        # fallback: geometric continuation of the last observed ratio
        vals = np.abs(np.asarray(self.table.values, dtype=float))
        nz = vals[vals > 0]
        if nz.size < 2:
            return float(nz[-1]) if nz.size else 0.0
        r = min(0.9, nz[-1] / nz[-2])
        return float(nz[-1] * r / (1.0 - r))

    def star_ratio(self, rho: float) -> float:
        if self.table.c_beta_value is None or self.table.c0 is None:
            return 0.0
        return rho * self.table.c_beta_value / self.table.c0

    # -- canonical side ------------------------------------------------------

    def f_coefficient(self, N: float, n: int) -> float:
        """F(n) = P_{N,V}(n) B(n) / (n+1)."""
        return p_poly(N, self.region.volume, n) * self.coefficient(n) / (n + 1)

    def interaction_sum(self, N: float) -> float:
        top = min(self.n_max, max(0, int(math.ceil(N)) - 1))
        return sum(self.f_coefficient(N, n) for n in range(1, top + 1))

    def log_z_canonical(self, N: int) -> SeriesValue:
        """log Z(N) = log(V^N / N!) + N * sum_n F(n), with tail metadata."""
        if N < 0:
            raise ArgumentError("N must be >= 0")
        V = self.region.volume
        free_part = N * math.log(V) - _ln_factorial(float(N), self.stirling_policy)
        if N <= 1:
            return SeriesValue(free_part, 0.0, False)
        value = free_part + N * self.interaction_sum(N)
        tail = 0.0 if self.n_max >= N - 1 else N * self.series_tail_bound()
        warn = self.star_ratio(N / V) >= 1.0
        return SeriesValue(value, tail, warn)

    def free_energy_f(self, N: int) -> SeriesValue:
        """f(N) = -log Z(N) / (beta V)."""
        lz = self.log_z_canonical(N)
        scale = self.beta * self.region.volume
        return SeriesValue(-lz.value / scale, lz.tail / scale, lz.star_warning)

    # -- density-form free energy -------------------------------------------

    def _script_p_deriv(self, n: int, m: int) -> np.ndarray:
        key = (n, m)
        if key not in self._poly_cache:
            roots = np.arange(0, n + 1) / self.region.volume
            coeffs = np.polynomial.polynomial.polyfromroots(roots)
            for _ in range(m):
                coeffs = np.polynomial.polynomial.polyder(coeffs)
            self._poly_cache[key] = coeffs
        return self._poly_cache[key]

    def cal_f(self, rho: float) -> float:
        """Density-form free energy: (rho(log rho - 1) - sum 𝒫 B /(n+1))/beta."""
        return self.cal_f_derivative(rho, 0)

    def cal_f_derivative(self, rho: float, m: int) -> float:
        """Exact m-th derivative: closed-form entropy part plus term-wise
        polynomial derivatives of the interaction part."""
        if not 0.0 < rho < 1.0:
            raise ArgumentError("rho must be in (0, 1)")
        if m < 0:
            raise ArgumentError("m must be >= 0")
        if m == 0:
            ent = rho * (math.log(rho) - 1.0)
        elif m == 1:
            ent = math.log(rho)
        else:
            ent = (-1.0) ** m * math.factorial(m - 2) / rho ** (m - 1)
        inter = 0.0
        V = self.region.volume
        for n in range(1, self.n_max + 1):
            if not n / V < rho:
                continue
            coeffs = self._script_p_deriv(n, m)
            inter += float(np.polynomial.polynomial.polyval(rho, coeffs)) \
                * self.coefficient(n) / (n + 1)
        return (ent - inter) / self.beta

    def derivative_tail_bound(self, rho: float, m: int) -> float:
        """Bound on the dropped n > n_max part of the m-th derivative, from
        the fitted decay constants and the falling-polynomial growth bound
        |𝒫^{(m)}/m!| <= 2 C(n+1, m) rho^{1-m} P."""
        c_amp, c_rate = self.table.tail_c, self.table.tail_rate
        if c_amp is None or c_rate is None or c_rate <= 0:
            return 0.0 if np.all(np.asarray(self.table.values) == 0.0) else math.inf
        q = math.exp(-c_rate)
        total = 0.0
        term_n = self.n_max + 1
        while True:
            term = math.comb(term_n + 1, m) if m <= term_n + 1 else 0
            add = term * c_amp * q ** term_n
            total += add
            term_n += 1
            if add < 1e-18 * max(total, 1e-300) or term_n > self.n_max + 400:
                break
        return 2.0 * math.factorial(m) * rho ** (1 - m) * total / self.beta

    # -- grand-canonical side -------------------------------------------------

    def n_max_particles(self, mu: float, floor_log: float = -30.0) -> int:
        return stability_n_max(self.beta, mu, self.table.stability_b,
                               self.region.volume, floor_log=floor_log)

    def tilted_log_weights(self, mu: float) -> np.ndarray:
        """log[e^{beta mu N} Z(N)] for N = 0..N_max(mu)."""
        n_cap = self.n_max_particles(mu)
        return np.array([self.beta * mu * N + self.log_z_canonical(N).value
                         for N in range(n_cap + 1)])

    def pressure_grand(self, mu: float) -> SeriesValue:
        """p = log Xi / (beta V) over the stability-truncated sum; the tail
        carries both the truncation remainder and the series tails."""
        logw = self.tilted_log_weights(mu)
        log_xi = float(logsumexp(logw))
        scale = self.beta * self.region.volume
        n_cap = logw.size - 1
        t = math.exp(self.beta * (mu + self.table.stability_b)) \
            * self.region.volume
        log_bound = (n_cap + 1) * math.log(t) - float(gammaln(n_cap + 2))
        ratio = t / (n_cap + 2)
        geom = 1.0 / (1.0 - ratio) if ratio < 0.5 else 2.0
        trunc = math.exp(log_bound - log_xi) * geom / scale
        series_tail = max(self.log_z_canonical(N).tail
                          for N in range(n_cap + 1)) / scale
        warn = self.star_ratio(max(1.0, float(np.argmax(logw))) /
                               self.region.volume) >= 1.0
        return SeriesValue(log_xi / scale, trunc + series_tail, warn)


def stability_n_max(beta: float, mu: float, stability_b: float,
                    volume: float, floor_log: float = -30.0,
                    hard_cap_factor: float = 10.0) -> int:
    """First N past the weight peak where the stability bound
    [e^{beta(mu+B)} V]^N / N! drops below e^{floor_log}."""
    t = math.exp(beta * (mu + stability_b)) * volume
    cap = hard_cap_factor * t + 50.0
    N = 1
    while True:
        log_bound = N * math.log(t) - float(gammaln(N + 1))
        if N > t and log_bound < floor_log:
            return N
        N += 1
        if N > cap:
            raise CapacityError(
                f"stability cutoff exceeded the hard cap {cap:.0f}")
