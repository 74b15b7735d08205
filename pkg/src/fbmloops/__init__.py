"""Fractional Brownian loops and starbursts: sampling, local times, Edwards reweighting."""

from .errors import (DivergenceError, DomainError, EmbeddingError, FbmLoopsError, FormatError,
                     KernelNotPDError, NumericError, ResourceError)
from .kernel import (CovarianceMatrix, Grid, KernelSpec, build_cov_matrix,
                     check_positive_definite, covariance, geodesic, increment_variance,
                     lnd_constant)
from .sampler import PathEnsemble, SeedSpec, sample, sample_dense, sample_loop_circulant, sample_star
from .localtime import (LocalTimeEstimate, center, expected_L_eps_analytic, expected_local_time_grid,
                        heat_kernel, local_time, local_time_gap_split, local_time_path,
                        second_moment_analytic)
from .starburst import (CouplingWeights, branch_self_local_time_centered, combined_local_time,
                        cross_local_time, expected_cross_local_time)
from .edwards import EdwardsEstimate, edwards_weights, reweighted_observable, stability_scan
from .io import load_ensemble, save_ensemble
from .verification import ExperimentReport

__version__ = "0.1.0"
