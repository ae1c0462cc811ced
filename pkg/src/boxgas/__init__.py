"""boxgas: cluster-expansion thermodynamics and particle-number deviation
estimates for a classical gas in a box with zero boundary conditions,
validated against exact oracles."""

from .potentials import (PairPotential, zero_potential, hard_rod,
                         square_well, tabulated, evaluate, mayer_f, c_beta,
                         check_condition_star, default_c0)
from .graphs import LabeledGraph, GraphFamily, enumerate_graphs, \
    is_connected, is_biconnected
from .coeffs import (ClusterTable, IntegrationConfig, beta_n_infinite,
                     b_lambda_2connected, b_lambda_polymer,
                     fit_coefficients_from_oracle, decay_fit, build_table)
from .thermo import (SimulationRegion, FreeEnergyModel, p_poly,
                     script_p_poly, stirling_s, stirling_s_prime)
from .duality import (DualityPoint, duality_point, mean_density,
                      variance_sigma2, find_n_star, deviation_center,
                      find_mu_tilde, gc_free_energy, log_mgf,
                      InfiniteVolumeModel)
from .deviations import (DeviationSpec, DeviationReport, make_deviation,
                         m_alpha, rate_i_gc, rate_i_infinite, variance_d,
                         variance_d_alpha, error_e, j_ratio, j_expansion,
                         k_normalization, k_region_masses, precise_ld,
                         moderate_dev, lclt)
from .oracle import (OracleResult, tonks_log_z, quadrature_log_z,
                     exact_prob, probability_vector, char_fn_invert)

__version__ = "0.1.0"
