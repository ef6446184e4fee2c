"""Random-walk node embeddings: count limits, Gram solvers and SBM evaluation."""

__version__ = "0.1.0"

from .errors import (AssumptionError, ConnectivityError, DegenerateNodeError,  # noqa: E402
                     DivergenceError, EmptyInputError, ErgonodeError, InputError,
                     NumericalError, ParameterError)
from .graph import (Graph, SbmParams, connected_components, default_epsilon,  # noqa: E402
                    degrees, expected_sbm_graph, generate_sbm, smooth_graph,
                    stationary_distribution, transition_matrix)
from .walks import HardWindow, WalkConfig, count_bigrams, sample_walks  # noqa: E402
from .ergodic import (Geometric, InverseFactorial, LimitCoefficients, PmiMatrix,  # noqa: E402
                      clip_pmi, double_limits, empirical_pmi, ergodic_limits,
                      finite_r_limits, gram_ergo_pmi, project_psd_rank,
                      weighted_ergodic_limits)
from .objective import (SgdConfig, factorize_gram, objective_gradient,  # noqa: E402
                        objective_value, solve_embeddings_sgd)
from .nuclear import NucConfig, solve_nuc  # noqa: E402
from .expected import (DbcMatrix, dbc_eigen, dbc_nuclear_norm, dbc_to_dense,  # noqa: E402
                       expected_coefficients, expected_psd_solution, expected_pmi_solution)
from .metrics import (gaussian_ellipse, gram_distance, procrustes_align, snr_1d,  # noqa: E402
                      spectral_embedding, svd_coordinates)
