"""Functional PCA with covariate-specific eigenvalues.

The model keeps one set of temporal eigenfunctions for all covariate values
and lets only the eigenvalues vary with the covariate. Estimation runs in
three smoothing stages: a local linear mean fit, a pooled covariance fit
with diagonal pairs excluded, and a kernel-weighted least squares regression
of centered cross-products on eigenfunction products that yields the
eigenvalue maps. Score-based alternatives (trapezoid integration for dense
data, conditional prediction for sparse data) and a simulation/clustering
harness round out the pipeline.
"""

from .dataset import (FunctionalDataset, SamplingScheme, SchemeKind, Subject,
                      classify_scheme, load_dataset, make_dataset,
                      save_dataset, validate)
from .eigenbasis import (EigenBasis, eigendecompose, eval_basis,
                         eval_eigenfunction, select_truncation,
                         trapezoid_weights)
from .eigenvalues import (DesignBlock, EigenvalueField, ScoreSet,
                          build_design, eigenvalue_field, pace_scores,
                          pc_eigenvalues, pc_scores_trapezoid,
                          reconstruct_cov, score_set, wls_eigenvalues)
from .errors import (DimensionMismatchError, EigenFpcaError,
                     EmptyNeighborhoodError, InsufficientLocalDataError,
                     ParseError, SingularSystemError)
from .kernels import (Bandwidths, KernelFamily, KernelSpec, cv_bandwidth,
                      eval_kernel, product_weight)
from .clustering import Clustering, kmeans, match_clusters
from .simulate import (RegionMap, SimTruth, gen_phantom, gen_sim1, gen_sim2,
                       gen_sim3, ise_cov3, ise_curve, recall_precision,
                       sim1_lambda, sim1_phi, smooth_field, table_lambda,
                       true_cov_tensor, true_lambda)
from .smoothing import (CovSurface, MeanField, NoiseEstimate, center_dataset,
                        estimate_mean, estimate_pooled_cov, estimate_sigma2,
                        local_linear_fit, nadaraya_watson_fit,
                        nadaraya_watson_mean)

__version__ = "0.1.0"
