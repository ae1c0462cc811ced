"""The numba kernels and the numpy fallbacks must agree exactly."""

import numpy as np
import pytest

from boxgas import _kernels
from boxgas.potentials import hard_rod, square_well


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_classify_backends_agree(n):
    a = _kernels.classify_graph_masks_impl(n, use_numba=False)
    b = _kernels.classify_graph_masks_impl(n, use_numba=_kernels.HAVE_NUMBA)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("pot", [hard_rod(1.0), square_well(1.0, 2.0, 0.4)])
def test_mayer_product_backends_agree(pot):
    rng = np.random.default_rng(5)
    x = rng.uniform(-3, 3, size=(5000, 3))
    edges_i = np.array([0, 1, 0], dtype=np.int64)
    edges_j = np.array([1, 2, 2], dtype=np.int64)
    params = pot.mayer_params(1.0)
    a = _kernels.mayer_product_batch_impl(x, edges_i, edges_j, params, False)
    b = _kernels.mayer_product_batch_impl(x, edges_i, edges_j, params,
                                          _kernels.HAVE_NUMBA)
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_boltzmann_backends_agree():
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 10, size=(4000, 6))   # N=3 particles at d=2
    params = square_well(1.0, 2.0, 0.4).v_params()
    a = _kernels.boltzmann_batch_impl(x, 2, 1.0, params, False)
    b = _kernels.boltzmann_batch_impl(x, 2, 1.0, params,
                                      _kernels.HAVE_NUMBA)
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_mayer_product_values():
    # hard rods: product is (-1)^edges inside all cores, 0 past any range
    params = hard_rod(1.0).mayer_params(1.0)
    x = np.array([[0.0, 0.5, 0.9], [0.0, 0.5, 5.0]])
    edges_i = np.array([0, 1], dtype=np.int64)
    edges_j = np.array([1, 2], dtype=np.int64)
    out = _kernels.mayer_product_batch(x, edges_i, edges_j, params)
    assert out[0] == 1.0    # two core overlaps: (-1) * (-1)
    assert out[1] == 0.0    # second pair beyond range


def test_env_flag_reported():
    assert _kernels.active_backend() in ("numba", "numpy")
