import math

import numpy as np
import pytest
from scipy.stats import poisson

from boxgas import (SimulationRegion, char_fn_invert, exact_prob, hard_rod,
                    probability_vector, quadrature_log_z, square_well,
                    tonks_log_z, zero_potential)
from boxgas.errors import CapacityError
from boxgas.oracle import ideal_log_z, tonks_log_z_source

BETA = 1.0


def test_tonks_closed_form_values():
    assert tonks_log_z(1, 10.0, 1.0) == pytest.approx(math.log(10.0))
    assert tonks_log_z(2, 10.0, 1.0) == pytest.approx(math.log(40.5))
    assert tonks_log_z(3, 10.0, 1.0) == pytest.approx(math.log(8 ** 3 / 6))
    assert tonks_log_z(0, 10.0, 1.0) == 0.0
    assert tonks_log_z(12, 10.0, 1.0) == -math.inf   # infeasible packing


@pytest.mark.parametrize("L,a", [(10.0, 1.0), (20.0, 1.0), (50.0, 1.0),
                                 (30.0, 0.5)])
def test_quadrature_matches_closed_form(L, a):
    region = SimulationRegion(1, L)
    pot = hard_rod(a)
    for N in range(1, 5):
        q = quadrature_log_z(pot, BETA, region, N)
        assert q.value == pytest.approx(tonks_log_z(N, L, a), abs=1e-8)
        assert q.error >= 0


def test_quadrature_zero_potential_exact():
    region = SimulationRegion(1, 50.0)
    q = quadrature_log_z(zero_potential(), BETA, region, 4)
    assert q.value == pytest.approx(4 * math.log(50) - math.log(24), abs=1e-12)


def test_quadrature_square_well_two_body():
    # analytic two-body integral over the box, exact 1D geometry
    a, R, eps, L = 1.0, 2.0, 0.4, 30.0
    region = SimulationRegion(1, L)
    q = quadrature_log_z(square_well(a, R, eps), BETA, region, 2)
    ff = -(2 * a * L - a * a) \
        + math.expm1(BETA * eps) * (2 * L * (R - a) - (R * R - a * a))
    assert q.value == pytest.approx(math.log((L * L + ff) / 2), abs=1e-10)


def test_quadrature_cap():
    with pytest.raises(CapacityError):
        quadrature_log_z(hard_rod(1.0), BETA, SimulationRegion(1, 50.0), 7)


def test_quadrature_d2_monte_carlo():
    region = SimulationRegion(2, 8.0)
    pot = hard_rod(1.0)
    q = quadrature_log_z(pot, BETA, region, 2, mc_samples=200_000, seed=3)
    # exact 2-body: V^2/2 + (1/2) iint f; boundary-free part dominates
    assert q.method == "monte-carlo"
    assert q.error > 0
    naive = 2 * math.log(region.volume) - math.log(2)
    assert q.value < naive   # excluded area can only lower it


def test_exact_prob_poisson():
    region = SimulationRegion(1, 100.0)
    mu0 = math.log(0.05)
    p = exact_prob(zero_potential(), BETA, region, mu0, 5,
                   ideal_log_z(region))
    assert p == pytest.approx(0.1754674, abs=1e-6)
    probs = probability_vector(BETA, region, mu0, ideal_log_z(region))
    assert probs.sum() == pytest.approx(1.0, abs=1e-10)
    exact = poisson.pmf(np.arange(probs.size), 5.0)
    assert np.max(np.abs(probs - exact)) < 1e-12


def test_exact_prob_beyond_cap_is_zero():
    region = SimulationRegion(1, 100.0)
    p = exact_prob(zero_potential(), BETA, region, math.log(0.05), 10_000,
                   ideal_log_z(region))
    assert p == 0.0


def test_probability_normalization_tonks():
    region = SimulationRegion(1, 50.0)
    z = tonks_log_z_source(region, 1.0)
    probs = probability_vector(BETA, region, -3.445, z,
                               stability_b=0.0)
    assert probs.sum() == pytest.approx(1.0, abs=1e-10)


def test_char_fn_invert_point_mass():
    pm = np.zeros(8)
    pm[3] = 1.0
    assert char_fn_invert(pm, 3) == pytest.approx(1.0, abs=1e-12)
    assert char_fn_invert(pm, 5) == pytest.approx(0.0, abs=1e-12)


def test_char_fn_invert_poisson():
    counts = np.arange(61)
    probs = poisson.pmf(counts, 5.0)
    for n in (0, 3, 5, 12, 40):
        assert char_fn_invert(probs, n) == pytest.approx(probs[n], abs=1e-10)


def test_char_fn_invert_tonks_vector():
    region = SimulationRegion(1, 100.0)
    z = tonks_log_z_source(region, 1.0)
    probs = probability_vector(BETA, region, -3.445, z)
    for n in range(probs.size):
        assert char_fn_invert(probs, n) == pytest.approx(probs[n], abs=1e-10)
