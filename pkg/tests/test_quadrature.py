"""Cascade quadrature: exact on piecewise-constant Mayer products."""

import math

import numpy as np
import pytest

from boxgas.potentials import hard_rod, square_well, zero_potential
from boxgas.quadrature import (box_graph_integral, mc_graph_integral,
                               pinned_graph_integral, piecewise_nodes)


def test_piecewise_nodes_integrate_polynomial():
    xs, ws = piecewise_nodes(0.0, 2.0, [0.7, 1.3], points=8)
    assert np.sum(ws * xs ** 3) == pytest.approx(4.0, abs=1e-12)


def test_pinned_pair_integral():
    # single edge: the plain Mayer integral, -2a for hard rods
    val = pinned_graph_integral(hard_rod(1.0), 1.0, [(0, 1)], 2)
    assert val == pytest.approx(-2.0, abs=1e-12)


def test_pinned_triangle_integral():
    # |{|x|<1, |y|<1, |x-y|<1}| = 3, one sign per edge
    val = pinned_graph_integral(hard_rod(1.0), 1.0,
                                [(0, 1), (0, 2), (1, 2)], 3)
    assert val == pytest.approx(-3.0, abs=1e-10)


def test_pinned_square_well_pair():
    pot = square_well(1.0, 2.0, 0.4)
    expect = -2.0 + 2.0 * math.expm1(0.4)
    val = pinned_graph_integral(pot, 1.0, [(0, 1)], 2)
    assert val == pytest.approx(expect, abs=1e-10)


def test_box_pair_integral_exact_geometry():
    # (1/1) * int_box^2 f = -(2 a L - a^2) for hard rods
    L = 50.0
    val = box_graph_integral(hard_rod(1.0), 1.0, L, [(0, 1)], 2)
    assert val == pytest.approx(-(2 * L - 1.0), abs=1e-9)


def test_box_triangle_against_mc():
    # 3-vertex triangle over a small box, cross-checked by seeded MC
    pot = hard_rod(1.0)
    edges = [(0, 1), (0, 2), (1, 2)]
    exact = box_graph_integral(pot, 1.0, 6.0, edges, 3)
    mc, err = mc_graph_integral(pot, 1.0, edges, 3, dimension=1,
                                samples=400_000, seed=9, box_side=6.0)
    assert abs(exact - mc) < 4.0 * err


def test_zero_potential_short_circuit():
    assert box_graph_integral(zero_potential(), 1.0, 10.0, [(0, 1)], 2) == 0.0


def test_mc_reproducible():
    pot = hard_rod(1.0)
    edges = [(0, 1), (1, 2)]
    a = mc_graph_integral(pot, 1.0, edges, 3, 1, 50_000, seed=4, box_side=8.0)
    b = mc_graph_integral(pot, 1.0, edges, 3, 1, 50_000, seed=4, box_side=8.0)
    assert a == b
