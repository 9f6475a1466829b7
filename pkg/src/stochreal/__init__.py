"""Linear-Gaussian generative models, stochastic realization and expressivity."""
__version__ = "0.1.0"

from .errors import StochRealError
from .expressivity import (CartographyGrid, ClassificationReport, FamilyVerdict, classify,
                           classify_batch, closed_form_labels, dgum_feasible,
                           gum_from_realization, hmc_feasible, rnn_feasible,
                           scalar_cartography)
from .inference import FilterState, kalman_filter, validate, whiteness_check
from .model import (CovarianceSeries, GumParameters, ModelFamily, Trajectory,
                    analytic_covariance, closed_loop_matrix, empirical_covariance,
                    is_stationary, simulate, simulate_many, solve_stationary_eta)
from .realization import (HankelBlock, RealizationTriplet, build_hankel, find_isomorphism,
                          ho_kalman, numerical_rank, realize, reconstruct_series,
                          similarity_transform)
from .stochastic import (NoiseCovariances, SolutionSetSummary, compute_extremal_P,
                         extract_noise, is_feasible, positive_real_check, residual_matrix,
                         scalar_interval, toeplitz_is_covariance)
