import math

import numpy as np
import pytest

from boxgas import (c_beta, check_condition_star, default_c0, evaluate,
                    hard_rod, mayer_f, square_well, tabulated, zero_potential)
from boxgas.errors import ArgumentError
from boxgas.potentials import mayer_f_radial, validate_stability


def test_evaluate_zero_anywhere():
    pot = zero_potential()
    for x in (0.0, 0.5, [1.0, 2.0], -3.0):
        assert evaluate(pot, x) == 0.0


def test_evaluate_hard_rod_core():
    pot = hard_rod(1.0)
    assert evaluate(pot, 0.5) == math.inf
    assert evaluate(pot, 1.7) == 0.0


def test_evaluate_square_well():
    pot = square_well(1.0, 2.0, 0.3)
    assert evaluate(pot, 1.5) == -0.3
    assert evaluate(pot, 0.2) == math.inf
    assert evaluate(pot, 2.5) == 0.0


def test_evaluate_dimension_mismatch():
    with pytest.raises(ArgumentError):
        evaluate(hard_rod(1.0), [1.0, 2.0], expected_dim=1)


def test_mayer_zero_potential():
    assert mayer_f(zero_potential(), 1.0, 0.7) == 0.0


def test_mayer_hard_rod_exact_values():
    pot = hard_rod(1.0)
    assert mayer_f(pot, 1.0, 0.3) == -1.0   # no overflow path in the core
    assert mayer_f(pot, 1.0, 1.7) == 0.0


def test_mayer_even_and_bounded():
    pot = square_well(1.0, 2.0, 0.4)
    rng = np.random.default_rng(3)
    upper = math.expm1(1.0 * pot.well_depth)
    for x in rng.uniform(-4, 4, 200):
        f = mayer_f(pot, 1.0, x)
        assert f == mayer_f(pot, 1.0, -x)
        assert -1.0 <= f <= upper


def test_mayer_needs_positive_beta():
    with pytest.raises(ArgumentError):
        mayer_f(hard_rod(1.0), 0.0, 1.0)


def test_c_beta_hard_rod_1d():
    value, err = c_beta(hard_rod(1.0), 1.0, 1)
    assert value == pytest.approx(2.0, abs=1e-10)
    assert err <= 1e-10


def test_c_beta_hard_disk_matches_mc_oracle():
    # area of the unit disk, against a seeded Monte Carlo oracle
    value, _ = c_beta(hard_rod(1.0), 1.0, 2)
    rng = np.random.default_rng(42)
    pts = rng.uniform(-1, 1, size=(400_000, 2))
    inside = (pts ** 2).sum(axis=1) < 1.0
    mc = 4.0 * inside.mean()
    sigma = 4.0 * inside.std() / math.sqrt(len(pts))
    assert abs(value - math.pi) < 1e-9
    assert abs(value - mc) < 3.5 * sigma


def test_c_beta_zero_potential():
    assert c_beta(zero_potential(), 1.0, 1)[0] == 0.0


def test_c_beta_monotone_in_core_radius():
    values = [c_beta(hard_rod(a), 1.0, 1)[0] for a in (0.5, 1.0, 1.5, 2.0)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_condition_star_cases():
    ok, margin = check_condition_star(0.0, 2.0, 0.25)
    assert ok and margin == 0.0
    ok, margin = check_condition_star(0.03, 2.0, 0.25)
    assert ok and margin == pytest.approx(0.24)
    ok, _ = check_condition_star(0.2, 2.0, 0.25)
    assert not ok


def test_default_c0():
    assert default_c0(1.0, 0.0) == pytest.approx(math.exp(-1.0))
    assert default_c0(2.0, 0.5) == pytest.approx(math.exp(-3.0))


def test_stability_sampling():
    assert validate_stability(hard_rod(1.0)) >= 0.0
    assert validate_stability(zero_potential()) >= 0.0
    assert validate_stability(square_well(1.0, 2.0, 0.4)) >= 0.0


def test_tabulated_matches_square_well():
    # a fine table of the square well reproduces its Mayer function
    sw = square_well(1.0, 2.0, 0.4)
    rs = np.linspace(1.0, 2.0, 200)
    pot = tabulated(rs, np.full_like(rs, -0.4), hard_core=1.0,
                    stability_b=sw.stability_b)
    for r in (0.5, 1.3, 1.9, 2.4):
        assert mayer_f(pot, 1.0, r) == pytest.approx(mayer_f(sw, 1.0, r),
                                                     abs=1e-12)
    vals = mayer_f_radial(pot, 1.0, np.array([0.2, 1.5, 3.0]))
    assert vals[0] == -1.0 and vals[2] == 0.0
