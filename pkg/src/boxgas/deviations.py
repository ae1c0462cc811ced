"""Deviation estimates for the particle count: the sharp large-deviation
formula (exponential rate with Gaussian pre-factor), local moderate
deviations with order-dependent variance corrections, and the local CLT
as the boundary case.

Every probability estimate comes with two error figures:

* residual_bound -- the literal theorem-shaped bound (calibrated constant
  over volume for the sharp estimate; 2 e^{-gauss} E / sqrt(2 pi D+ V) for
  the moderate one), and
* budget -- a machine-checkable bound assembled additively from the
  term-wise error functional, its truncation tail, series tails, the
  Stirling-gap term e^{1/(12 N*)} - 1, and the center-offset term; the two
  labeled extras cover the v-independent part the literal functional
  misses at the central value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .duality import (DualityPoint, deviation_center, duality_point,
                      find_mu_tilde, gc_free_energy, mean_density,
                      InfiniteVolumeModel)
from .errors import ArgumentError, RegimeError
from .thermo import FreeEnergyModel, SeriesValue, stirling_s

__all__ = [
    "DeviationSpec", "DeviationReport", "ErrorTerm", "make_deviation",
    "m_alpha", "rate_i_gc", "rate_i_infinite", "variance_d",
    "variance_d_alpha", "error_e", "j_ratio", "j_expansion",
    "k_normalization", "k_region_masses", "precise_ld", "moderate_dev",
    "lclt",
]


def m_alpha(alpha: float) -> int:
    """Smallest integer m with m(1 - alpha) - 1 > 0."""
    if not 0.5 <= alpha < 1.0:
        raise ArgumentError("alpha must be in [1/2, 1)")
    m = 2
    while m * (1.0 - alpha) - 1.0 <= 0.0:
        m += 1
    return m


@dataclass(frozen=True)
class DeviationSpec:
    """A recentered integer fluctuation: N-tilde = center + round(u V^alpha),
    with the effective amplitude recomputed after rounding."""

    alpha: float
    u: float
    center: int
    center_policy: str
    n_tilde: int
    effective_u: float
    star_ratio: float = 0.0


def make_deviation(model: FreeEnergyModel, point: DualityPoint, alpha: float,
                   u: float, center_policy: str = "auto") -> DeviationSpec:
    if not 0.5 <= alpha <= 1.0:
        raise ArgumentError("alpha must be in [1/2, 1]")
    V = model.region.volume
    if center_policy == "auto":
        center = point.n_bar if alpha == 1.0 \
            else deviation_center(model, point.mu0)
    elif center_policy == "mean":
        center = point.n_bar
    elif center_policy == "maximizer":
        center = deviation_center(model, point.mu0)
    else:
        raise ArgumentError(f"unknown center policy {center_policy!r}")
    n_tilde = center + round(u * V ** alpha)
    if n_tilde < 0:
        raise ArgumentError("deviation target below zero particles")
    eff = (n_tilde - center) / V ** alpha
    return DeviationSpec(alpha=alpha, u=u, center=center,
                         center_policy=center_policy, n_tilde=n_tilde,
                         effective_u=eff,
                         star_ratio=model.star_ratio(n_tilde / V))


# ---------------------------------------------------------------------------
# rate and variance pieces
# ---------------------------------------------------------------------------

def rate_i_gc(model: FreeEnergyModel, rho_tilde: float, rho_bar: float,
              mu0: float) -> float:
    """beta [f_gc(rho~) - f_gc(rho-bar) - mu0 (rho~ - rho-bar)] >= 0."""
    return model.beta * (gc_free_energy(model, rho_tilde)
                         - gc_free_energy(model, rho_bar)
                         - mu0 * (rho_tilde - rho_bar))


def rate_i_infinite(inf_model: InfiniteVolumeModel, rho_tilde: float,
                    rho0: float) -> float:
    """Bulk rate: beta [f(rho~) - f(rho0) - f'(rho0)(rho~ - rho0)]."""
    return inf_model.beta * (inf_model.f(rho_tilde) - inf_model.f(rho0)
                             - inf_model.f_derivative(rho0, 1)
                             * (rho_tilde - rho0))


def variance_d(model: FreeEnergyModel, rho_star: float) -> float:
    """Pre-factor variance 1 / (beta F''(rho*))."""
    g2 = model.beta * model.cal_f_derivative(rho_star, 2)
    if g2 <= 0:
        raise RegimeError("non-positive curvature: outside the window")
    return 1.0 / g2


def variance_d_alpha(model: FreeEnergyModel, rho_star: float, alpha: float,
                     u_eff: float, signed: str = "plain") -> float:
    """Moderate-deviation variance with order corrections from the third
    derivative up to m(alpha)-1; 'plus'/'minus' take +/-|F^(m)|.

    At alpha = 1/2 the correction sum is empty and all variants equal the
    plain pre-factor variance bit for bit."""
    if signed not in ("plain", "plus", "minus"):
        raise ArgumentError("signed must be plain, plus or minus")
    m_top = m_alpha(alpha)
    V = model.region.volume
    bracket = model.beta * model.cal_f_derivative(rho_star, 2)
    for m in range(3, m_top):
        g = model.beta * model.cal_f_derivative(rho_star, m)
        if signed == "plus":
            g = abs(g)
        elif signed == "minus":
            g = -abs(g)
        bracket += 2.0 * u_eff ** (m - 2) * g \
            / (math.factorial(m) * V ** ((m - 2) * (1.0 - alpha)))
    if bracket <= 0:
        raise RegimeError(f"{signed} variance bracket non-positive")
    return 1.0 / bracket


# ---------------------------------------------------------------------------
# the error functional
# ---------------------------------------------------------------------------

@dataclass
class ErrorTerm:
    value: float           # literal bracket (single absolute value)
    absolute: float        # term-wise triangle bound, always >= remainder
    tail: float            # what truncating the m-sum may have dropped
    precision_warning: bool

    def total(self) -> float:
        return self.absolute + self.tail


def error_e(model: FreeEnergyModel, alpha: float, v: float, rho_star: float,
            mu0: float, m_trunc: int | None = None) -> ErrorTerm:
    """The Taylor-remainder error functional for a fluctuation v V^alpha.

    Collects the m >= m(alpha) expansion terms plus the chemical-potential
    consistency term v V^alpha (beta mu0 - beta F'(rho*)).  `value` is the
    literal single-|.|; `absolute` the term-wise bound.  The m-sum stops at
    m_trunc (default m(alpha)+6); what it drops is measured directly as the
    exact remainder of the Taylor polynomial of the density-form free
    energy (which stays finite even at the entropy radius, where summing
    further terms would not converge), plus the table-truncation part of
    the included derivatives."""
    m_star = m_alpha(alpha)
    if m_trunc is None:
        m_trunc = m_star + 6
    V = model.region.volume
    g1 = model.beta * model.cal_f_derivative(rho_star, 1)
    mu_term = v * V ** alpha * (model.beta * mu0 - g1)

    def term(m: int) -> float:
        g = model.beta * model.cal_f_derivative(rho_star, m)
        return v ** m * V ** (m * (alpha - 1.0) + 1.0) * g / math.factorial(m)

    terms = [term(m) for m in range(m_star, m_trunc + 1)]
    value = abs(sum(terms) + mu_term)
    absolute = sum(abs(t) for t in terms) + abs(mu_term)
    # exact Taylor remainder beyond m_trunc
    rho_tilde = rho_star + v * V ** (alpha - 1.0)
    if not 0.0 < rho_tilde < 1.0:
        raise ArgumentError("fluctuation leaves the density domain")
    poly = sum(term(m) for m in range(1, m_trunc + 1))
    exact_diff = V * model.beta * (model.cal_f(rho_tilde)
                                   - model.cal_f(rho_star))
    tail = abs(exact_diff - poly)
    for m in range(m_star, m_trunc + 1):
        tb = model.derivative_tail_bound(rho_star, m)
        if math.isfinite(tb):
            tail += abs(v) ** m * V ** (m * (alpha - 1.0) + 1.0) \
                * model.beta * tb / math.factorial(m)
    warn = tail > max(abs(terms[0]) if terms else 0.0, abs(mu_term), 1e-300)
    return ErrorTerm(value=value, absolute=absolute, tail=tail,
                     precision_warning=warn)


# ---------------------------------------------------------------------------
# J and K
# ---------------------------------------------------------------------------

def j_ratio(model: FreeEnergyModel, mu: float, N: int, N_ref: int) -> SeriesValue:
    """log J = beta mu (N - N_ref) + log Z(N) - log Z(N_ref)."""
    za = model.log_z_canonical(N)
    zb = model.log_z_canonical(N_ref)
    return SeriesValue(model.beta * mu * (N - N_ref) + za.value - zb.value,
                       za.tail + zb.tail, za.star_warning or zb.star_warning)


@dataclass
class JExpansion:
    """Expansion of log J(N, N*) around the maximizer: the Gaussian /
    moderate part, the exact Stirling difference, the chemical-potential
    residual term, and the error functional covering the rest."""

    gaussian_exponent: float
    stirling_difference: float   # -V [S(rho~) - S(rho*)], exact
    mu_residual_term: float
    error: ErrorTerm

    def center(self) -> float:
        return self.gaussian_exponent + self.stirling_difference


def j_expansion(model: FreeEnergyModel, mu0: float, alpha: float, v: float,
                n_star: int) -> JExpansion:
    V = model.region.volume
    rho_star = n_star / V
    n_tilde = n_star + v * V ** alpha
    rho_tilde = n_tilde / V
    d_alpha = variance_d_alpha(model, rho_star, alpha, v, "plain")
    gauss = -v ** 2 * V ** (2 * alpha - 1.0) / (2.0 * d_alpha)
    sdiff = -V * (stirling_s(rho_tilde, V) - stirling_s(rho_star, V))
    g1 = model.beta * model.cal_f_derivative(rho_star, 1)
    mu_term = v * V ** alpha * (model.beta * mu0 - g1)
    err = error_e(model, alpha, v, rho_star, mu0)
    return JExpansion(gaussian_exponent=gauss, stirling_difference=sdiff,
                      mu_residual_term=mu_term, error=err)


def k_normalization(model: FreeEnergyModel, mu: float, N_ref: int) -> SeriesValue:
    """log K = -log sum_N J(N, N_ref), summed over the truncated range."""
    logw = model.tilted_log_weights(mu)
    if N_ref >= logw.size:
        raise ArgumentError("reference count beyond the truncation cap")
    log_sum_j = float(logsumexp(logw - logw[N_ref]))
    tails = max(model.log_z_canonical(N).tail for N in range(logw.size))
    return SeriesValue(-log_sum_j, 2.0 * tails)


def k_region_masses(model: FreeEnergyModel, mu: float, N_ref: int,
                    alpha: float, v: float, delta: float | None = None,
                    v_prime: float | None = None) -> dict:
    """Diagnostic split of sum_N J over the center window |N - N_ref| <=
    v V^alpha, the intermediate ring (when alpha is at or below the
    boundary exponent (2d-1)/2d), and the far tail; reports each region's
    share of the total.  Production paths always sum everything."""
    d = model.region.dimension
    V = model.region.volume
    boundary_exp = (2 * d - 1) / (2 * d)
    logw = model.tilted_log_weights(mu)
    rel = logw - logw[N_ref]
    counts = np.arange(rel.size)
    total = float(logsumexp(rel))
    window = np.abs(counts - N_ref) <= v * V ** alpha
    masses = {}

    def share(mask) -> float:
        if not np.any(mask):
            return 0.0
        return float(np.exp(logsumexp(rel[mask]) - total))

    masses["center"] = share(window)
    if alpha > boundary_exp:
        masses["far"] = share(~window)
    else:
        delta = delta if delta is not None else 0.5 * (boundary_exp + 1.0)
        if not delta > boundary_exp:
            raise ArgumentError("delta must exceed (2d-1)/(2d)")
        v_prime = v_prime if v_prime is not None else v
        ring = (~window) & (np.abs(counts - N_ref) <= v_prime * V ** delta)
        masses["ring"] = share(ring)
        masses["far"] = share(~window & ~ring)
        masses["delta"] = delta
        masses["v_prime"] = v_prime
    return masses


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class DeviationReport:
    """One deviation estimate with its full error budget and (optionally)
    the exact-oracle comparison."""

    volume: float
    spec: DeviationSpec
    rate: float
    d_variant: float            # the variance under the square root
    d_exponent: float           # the variance inside the exponent
    error_term: float           # literal error functional
    log_estimate: float
    estimate: float
    residual_bound: float | None
    budget: float
    mu_tilde: float | None = None
    n_star_tilde: int | None = None
    center_gap: float | None = None
    oracle_prob: float | None = None
    oracle_residual: float | None = None
    observed_c: float | None = None
    warnings: list = field(default_factory=list)

    def to_row(self) -> dict:
        return {
            "volume": self.volume,
            "alpha": self.spec.alpha,
            "u_eff": self.spec.effective_u,
            "estimate": self.estimate,
            "oracle": self.oracle_prob,
            "rate": self.rate,
            "d_variant": self.d_variant,
            "error_term": self.error_term,
            "residual": self.oracle_residual,
            "budget": self.budget,
            "warnings": ";".join(self.warnings),
        }


def _stirling_gap(center: int) -> float:
    return math.expm1(1.0 / (12.0 * max(center, 1)))


def _center_offset_gap(mean_n: float, center: int, d_var: float,
                       volume: float) -> float:
    delta = mean_n - center
    return -math.expm1(-delta ** 2 / (2.0 * d_var * volume))


def precise_ld(model: FreeEnergyModel, mu0: float, u: float,
               z_source=None, c_fit: float | None = None) -> DeviationReport:
    """Sharp large-deviation estimate at order alpha = 1: exponential rate
    from grand-canonical duality, Gaussian pre-factor at the maximizer of
    the matching tilted weight."""
    V = model.region.volume
    point = duality_point(model, mu0)
    spec = make_deviation(model, point, 1.0, u, "mean")
    rho_tilde = spec.n_tilde / V
    rate = rate_i_gc(model, rho_tilde, point.rho_bar, mu0)
    mu_t = find_mu_tilde(model, spec.n_tilde)
    n_star_t = deviation_center(model, mu_t)
    d_var = variance_d(model, n_star_t / V)
    log_est = -V * rate - 0.5 * math.log(2.0 * math.pi * d_var * V)
    est = math.exp(log_est)
    warnings = []
    if spec.star_ratio >= 1.0 or point.star_ratio >= 1.0:
        warnings.append("condition-star")
    mean_t = mean_density(model, mu_t).rho_bar * V
    budget = est * (_stirling_gap(n_star_t)
                    + _center_offset_gap(mean_t, n_star_t, d_var, V))
    budget += est * V * (model.log_z_canonical(spec.n_tilde).tail / V
                         + model.pressure_grand(mu0).tail)
    residual_bound = c_fit * est / V if c_fit is not None else None
    report = DeviationReport(
        volume=V, spec=spec, rate=rate, d_variant=d_var, d_exponent=d_var,
        error_term=0.0, log_estimate=log_est, estimate=est,
        residual_bound=residual_bound, budget=budget, mu_tilde=mu_t,
        n_star_tilde=n_star_t, center_gap=abs(spec.n_tilde - n_star_t),
        warnings=warnings)
    if z_source is not None:
        _attach_oracle(report, model, mu0, z_source)
    return report


def moderate_dev(model: FreeEnergyModel, mu0: float, u: float, alpha: float,
                 z_source=None) -> DeviationReport:
    """Local moderate-deviation estimate at order alpha in [1/2, 1),
    centered on the tilted-weight maximizer at mu0."""
    if not 0.5 <= alpha < 1.0:
        raise ArgumentError("alpha must be in [1/2, 1)")
    V = model.region.volume
    point = duality_point(model, mu0)
    spec = make_deviation(model, point, alpha, u, "maximizer")
    rho_star = spec.center / V
    d_exp = variance_d_alpha(model, rho_star, alpha, spec.effective_u, "plain")
    d_plus = variance_d_alpha(model, rho_star, alpha, spec.effective_u, "plus")
    err = error_e(model, alpha, spec.effective_u, rho_star, mu0)
    gauss = -spec.effective_u ** 2 * V ** (2 * alpha - 1.0) / (2.0 * d_exp)
    pref = math.sqrt(2.0 * math.pi * d_plus * V)
    log_est = gauss - math.log(pref)
    est = math.exp(log_est)
    residual_bound = 2.0 * math.exp(gauss) * err.value / pref
    mean_n = point.rho_bar * V
    budget = (2.0 * math.exp(gauss) * err.total() / pref
              + est * (_stirling_gap(spec.center)
                       + _center_offset_gap(mean_n, spec.center, d_exp, V)
                       + model.log_z_canonical(spec.n_tilde).tail))
    warnings = []
    if err.precision_warning:
        warnings.append("error-tail")
    if spec.star_ratio >= 1.0:
        warnings.append("condition-star")
    report = DeviationReport(
        volume=V, spec=spec, rate=-gauss / V, d_variant=d_plus,
        d_exponent=d_exp, error_term=err.value, log_estimate=log_est,
        estimate=est, residual_bound=residual_bound, budget=budget,
        center_gap=abs(mean_n - spec.center), warnings=warnings)
    if z_source is not None:
        _attach_oracle(report, model, mu0, z_source)
    return report


def lclt(model: FreeEnergyModel, mu0: float, u: float,
         z_source=None) -> DeviationReport:
    """Local central-limit estimate: the moderate path at alpha = 1/2
    (same code path, so the variance variants collapse bit for bit)."""
    return moderate_dev(model, mu0, u, 0.5, z_source=z_source)


def _attach_oracle(report: DeviationReport, model: FreeEnergyModel,
                   mu0: float, z_source) -> None:
    from .oracle import probability_vector  # local import, no cycle at load

    probs = probability_vector(model.beta, model.region, mu0, z_source,
                               stability_b=model.table.stability_b)
    n = report.spec.n_tilde
    p = float(probs[n]) if n < probs.size else 0.0
    report.oracle_prob = p
    report.oracle_residual = abs(p - report.estimate)
    if report.estimate > 0:
        report.observed_c = report.oracle_residual * report.volume \
            / report.estimate
