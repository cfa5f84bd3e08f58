"""Sparse precision matrix estimation with a spike-and-slab Lasso prior.

The estimator is the posterior mode under a mixture-of-Laplace prior on
off-diagonal entries, computed by an EM algorithm whose M-step is a
column-wise coordinate descent. Slab probabilities from the E-step give
the estimated graph.
"""

__version__ = "0.1.0"

from .dataset import Dataset, load_dataset, load_matrix, save_dataset, save_matrix
from .em import FitResult, FitState, e_step, fit, kkt_residual, solve_theta12, update_column
from .errors import (BagusError, DegenerateError, DivergenceError, GenerationFailedError,
                     InternalConsistencyError, InvalidDataError, NotPositiveDefiniteError,
                     TuningFailedError)
from .linalg import (ColumnPartition, chol_inverse, inv11_from_w, partition,
                     rank_two_spectral_bound, reassemble, sample_covariance, spectral_norm)
from .metrics import (ForecastTask, MetricsReport, aafe, confusion, error_norms, evaluate,
                      forecast, mcc, sensitivity, specificity, training_mean)
from .penalty import (Hyperparameters, convexity_cap, inclusion_prob, objective, pen_ss,
                      pen_ss_grad, pen_ss_hess, subgradient_interval)
from .selection import (GraphStructure, TuneReport, bic, default_grid, graph_from_precision,
                        roc_sweep, threshold_graph, tune)
from .simulate import (SimulationSpec, replicate, replication_seed, sample_mvn, simulate,
                       truth_matrix)

import types as _types

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, _types.ModuleType)]
