"""Exact diffusion for balanced left-stochastic combination policies."""

from .costs import (LeastSquares, Logistic, Quadratic, generate_logistic_data,
                    generate_ls_data, global_minimizer)
from .network import (Network, generate_random_network, generate_unbalanced_network,
                      load_network)
from .policy import (CombinationPolicy, StepSizes, build_policy, perron_closed_form,
                     perron_power_iteration, square_root_V, validate_policy,
                     verify_lemma_properties)
from .solver import RunConfig, Trajectory, run
from .stability import (build_error_dynamics, jury_stability_test,
                        spectral_radius_excluding_one, sweep_rho)

__version__ = "0.1.0"
