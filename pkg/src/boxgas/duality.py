"""Convex duality: grand-canonical moments, the tilted-weight maximizer,
the matching chemical potential, and infinite-volume limits.

The floor in N-bar = floor(rho-bar * V) gets a 1e-9 snap so that means
sitting on an integer (a common calibration point) are not knocked down a
whole count by rounding noise.

Maximizer ties: weights at two consecutive counts can agree exactly (the
ideal gas at integer mean does).  find_n_star breaks such ties toward the
smaller count, deterministically.  deviation_center -- the value the
deviation estimators recenter on -- picks instead the near-maximal count
closest to the grand-canonical mean: both choices attain the supremum, and
the nearest-mean one minimizes the center offset the estimators neglect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.optimize import brentq

from .errors import ArgumentError, ConvergenceError, RangeError, RegimeError
from .thermo import FreeEnergyModel, stirling_s_prime

FLOOR_SNAP = 1e-9
# Two log-weights within this window count as a degenerate maximizer pair.
# Genuine neighbouring gaps are O(1/N) >= 1e-3 at desk scales, while exact
# ties land within a few ulp and the matching-potential bisection leaves
# at most ~1e-8; 1e-7 separates the two regimes with room on both sides.
TIE_TOL = 1e-7


@dataclass
class MeanDensity:
    rho_bar: float
    n_bar: int
    dpdmu_residual: float    # |rho_bar - dp/dmu| from central differences


@dataclass
class DualityPoint:
    """Everything the deviation layer needs at one chemical potential."""

    mu0: float
    rho_bar: float
    n_bar: int
    sigma2: float
    n_star: int
    rho_star: float
    mu_consistency_residual: float   # |mu0 - F'(rho*) - S'(rho*)|
    dpdmu_residual: float
    d2pdmu2_residual: float
    star_ratio: float

    def to_dict(self) -> dict:
        return {
            "mu0": self.mu0, "rho_bar": self.rho_bar, "n_bar": self.n_bar,
            "sigma2": self.sigma2, "n_star": self.n_star,
            "rho_star": self.rho_star,
            "mu_consistency_residual": self.mu_consistency_residual,
            "dpdmu_residual": self.dpdmu_residual,
            "d2pdmu2_residual": self.d2pdmu2_residual,
            "star_ratio": self.star_ratio,
        }


def _weights(model: FreeEnergyModel, mu: float):
    logw = model.tilted_log_weights(mu)
    probs = np.exp(logw - logsumexp(logw))
    return logw, probs


def mean_density(model: FreeEnergyModel, mu0: float,
                 fd_step: float = 1e-5) -> MeanDensity:
    """Grand-canonical mean density and floored mean count, with the
    pressure-derivative identity residual attached."""
    _, probs = _weights(model, mu0)
    counts = np.arange(probs.size)
    mean_n = float(probs @ counts)
    rho_bar = mean_n / model.region.volume
    n_bar = int(math.floor(mean_n + FLOOR_SNAP))
    dp = (model.pressure_grand(mu0 + fd_step).value
          - model.pressure_grand(mu0 - fd_step).value) / (2 * fd_step)
    return MeanDensity(rho_bar=rho_bar, n_bar=n_bar,
                       dpdmu_residual=abs(dp - rho_bar))


def variance_sigma2(model: FreeEnergyModel, mu0: float,
                    fd_step: float = 1e-4) -> tuple[float, float]:
    """Variance density E[(N - mean)^2]/V and its finite-difference
    cross-check residual against p''(mu)/beta (relative)."""
    _, probs = _weights(model, mu0)
    counts = np.arange(probs.size)
    mean_n = float(probs @ counts)
    var = float(probs @ (counts - mean_n) ** 2) / model.region.volume
    pp = (model.pressure_grand(mu0 + fd_step).value
          - 2 * model.pressure_grand(mu0).value
          + model.pressure_grand(mu0 - fd_step).value) / fd_step ** 2
    rel = abs(pp / model.beta - var) / var if var > 0 else math.inf
    if var <= 0:
        raise RegimeError("non-positive grand-canonical variance")
    return var, rel


def find_n_star(model: FreeEnergyModel, mu: float) -> int:
    """argmax_N of beta mu N + log Z(N); exact-scan, ties to the smaller N."""
    logw = model.tilted_log_weights(mu)
    top = float(np.max(logw))
    candidates = np.nonzero(logw >= top - TIE_TOL)[0]
    n_star = int(candidates.min())
    if n_star == logw.size - 1:
        raise RegimeError("maximizer at the truncation boundary; cap too small")
    return n_star


def deviation_center(model: FreeEnergyModel, mu: float) -> int:
    """The near-maximal count nearest the mean (see module docstring)."""
    logw = model.tilted_log_weights(mu)
    top = float(np.max(logw))
    candidates = np.nonzero(logw >= top - TIE_TOL)[0]
    _, probs = _weights(model, mu)
    mean_n = float(probs @ np.arange(probs.size))
    dist = np.abs(candidates - mean_n)
    best = candidates[dist <= dist.min() + 1e-12]
    return int(best.max())


def find_mu_tilde(model: FreeEnergyModel, n_tilde: float,
                  tol: float = 1e-10, max_iter: int = 300) -> float:
    """The chemical potential whose grand-canonical mean count is n_tilde,
    by monotone bisection; |mean density - n_tilde/V| <= tol on success.

    The bracket grows outward from the consistency-equation guess
    mu = F'(rho) + S'(rho)/beta, doubling up to the half-width-10 search
    window (plus two escapes) before giving up."""
    V = model.region.volume
    rho_t = n_tilde / V
    if not 0.0 < rho_t < 1.0:
        raise ArgumentError("target density outside (0, 1)")
    if rho_t * V >= 1:
        guess = model.cal_f_derivative(rho_t, 1) \
            + stirling_s_prime(rho_t, V) / model.beta
    else:
        guess = math.log(rho_t) / model.beta

    def gap(mu):
        return mean_density(model, mu).rho_bar - rho_t

    width = 0.5
    lo = hi = None
    while width <= 40.0:
        lo, hi = guess - width, guess + width
        if gap(lo) < 0 < gap(hi):
            break
        width *= 2.0
    else:
        raise RangeError("could not bracket the matching chemical potential")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= tol:
            return mid
        if g < 0:
            lo = mid
        else:
            hi = mid
    raise RangeError("bisection failed to reach the density tolerance")


def gc_free_energy(model: FreeEnergyModel, rho: float) -> float:
    """sup_mu {mu rho - p(mu)}, attained where the mean density equals rho."""
    mu = find_mu_tilde(model, rho * model.region.volume)
    return mu * rho - model.pressure_grand(mu).value


def log_mgf(model: FreeEnergyModel, mu0: float, mu: float,
            cross_check: bool = False) -> float:
    """L(mu) = beta V [p(mu + mu0) - p(mu0)], the tilted log generating
    function; optionally cross-checked against the direct weighted sum."""
    scale = model.beta * model.region.volume
    value = scale * (model.pressure_grand(mu + mu0).value
                     - model.pressure_grand(mu0).value)
    if cross_check:
        logw, _ = _weights(model, mu0)
        norm = logsumexp(logw)
        direct = float(logsumexp(logw - norm
                                 + model.beta * mu * np.arange(logw.size)))
        if abs(direct - value) > 1e-8 * max(1.0, abs(value)):
            raise RegimeError("generating-function identity violated "
                              f"({direct} vs {value})")
    return value


def duality_point(model: FreeEnergyModel, mu0: float) -> DualityPoint:
    md = mean_density(model, mu0)
    sigma2, var_resid = variance_sigma2(model, mu0)
    n_star = find_n_star(model, mu0)
    rho_star = n_star / model.region.volume
    resid = abs(mu0 - model.cal_f_derivative(rho_star, 1)
                - stirling_s_prime(rho_star, model.region.volume) / model.beta)
    return DualityPoint(
        mu0=mu0, rho_bar=md.rho_bar, n_bar=md.n_bar, sigma2=sigma2,
        n_star=n_star, rho_star=rho_star, mu_consistency_residual=resid,
        dpdmu_residual=md.dpdmu_residual, d2pdmu2_residual=var_resid,
        star_ratio=model.star_ratio(md.rho_bar))


# ---------------------------------------------------------------------------
# infinite volume
# ---------------------------------------------------------------------------

class InfiniteVolumeModel:
    """Bulk free energy / pressure built from the infinite-volume
    coefficients; the Legendre pair f(rho) <-> p(mu)."""

    def __init__(self, beta: float, beta_n: np.ndarray):
        self.beta = beta
        self.beta_n = np.asarray(beta_n, dtype=float)
        if self.beta_n.size >= 3:
            tail = np.abs(self.beta_n[self.beta_n != 0.0])
            if tail.size >= 3 and np.any(tail[1:] / tail[:-1] > 4.0):
                raise ConvergenceError("coefficient sequence grows too fast")

    def f(self, rho: float) -> float:
        """beta f = rho(log rho - 1) - sum beta_n rho^(n+1)/(n+1)."""
        return self.f_derivative(rho, 0)

    def f_derivative(self, rho: float, m: int) -> float:
        if not 0.0 < rho < 1.0:
            raise ArgumentError("rho must be in (0, 1)")
        if m == 0:
            ent = rho * (math.log(rho) - 1.0)
        elif m == 1:
            ent = math.log(rho)
        else:
            ent = (-1.0) ** m * math.factorial(m - 2) / rho ** (m - 1)
        inter = 0.0
        for n, bn in enumerate(self.beta_n, start=1):
            if bn == 0.0:
                continue
            power = n + 1 - m
            if power < 0:
                continue
            fall = math.perm(n + 1, m)
            inter += bn / (n + 1) * fall * rho ** power
        return (ent - inter) / self.beta

    def mu_of_rho(self, rho: float) -> float:
        return self.f_derivative(rho, 1)

    def rho_of_mu(self, mu: float, lo: float = 1e-12,
                  hi: float = 0.999) -> float:
        """Inverse of f' on the convergence window (f' is increasing there)."""
        def g(rho):
            return self.f_derivative(rho, 1) - mu
        if g(lo) > 0 or g(hi) < 0:
            raise RangeError("density outside the solvable window")
        return float(brentq(g, lo, hi, xtol=1e-14))

    def p(self, mu: float) -> float:
        """Legendre transform: p(mu) = mu rho* - f(rho*) at f'(rho*) = mu."""
        rho = self.rho_of_mu(mu)
        return mu * rho - self.f(rho)

    def p_derivative(self, mu: float, k: int, h: float = 1e-5) -> float:
        if k == 1:
            return (self.p(mu + h) - self.p(mu - h)) / (2 * h)
        if k == 2:
            return (self.p(mu + h) - 2 * self.p(mu) + self.p(mu - h)) / h ** 2
        raise ArgumentError("only k = 1, 2 supported")

    def sigma2_infinity(self, mu: float) -> float:
        return self.p_derivative(mu, 2) / self.beta
