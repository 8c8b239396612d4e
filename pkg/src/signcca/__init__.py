"""Robust sparse canonical correlation analysis.

Estimates sparse leading canonical direction pairs by alternating
l1-penalized quadratic minimization over scatter blocks from one of three
estimators: the p-scaled spatial-sign covariance (robust to heavy tails),
the sample covariance, or the Kendall-tau bridged correlation matrix. Ships
with a seeded Monte-Carlo harness and a CLI for CSV data analysis.
"""

from .cov_models import (
    JointCovModel,
    block_ar_cov,
    build_model_i,
    build_model_ii,
    normalize_direction,
    sigma_orthonormal_basis,
    sparse_direction,
)
from .estimator import SparseCCA
from .metrics import (
    EvalReport,
    cos2_angle,
    evaluate_fit,
    oos_correlation,
    predictive_loss,
    selection_rates,
)
from .sampling import (
    DISTRIBUTION_KINDS,
    DistributionSpec,
    draw_dataset,
    mixture_scale,
    sample_mixture_scaled,
    sample_normal,
    sample_t3_scaled,
)
from .scatter import estimate_scatter, kendall_tau_matrix, nearest_psd, sample_cov
from .solver import (
    BIC_CRITERIA,
    CcaFit,
    LassoSubproblem,
    SolverOptions,
    bic_select,
    fit_scca,
    kkt_violation,
    lambda_sequence,
    solve_lasso_qp,
)
from .spatial import SpatialMedianResult, scaled_sscm, spatial_median, spatial_sign, spatial_sign_cov
from .types import ESTIMATOR_KINDS, CovBlocks, Dataset

__version__ = "0.1.0"

__all__ = [
    "BIC_CRITERIA",
    "CcaFit",
    "CovBlocks",
    "Dataset",
    "DISTRIBUTION_KINDS",
    "DistributionSpec",
    "ESTIMATOR_KINDS",
    "EvalReport",
    "JointCovModel",
    "LassoSubproblem",
    "SolverOptions",
    "SparseCCA",
    "SpatialMedianResult",
    "bic_select",
    "block_ar_cov",
    "build_model_i",
    "build_model_ii",
    "cos2_angle",
    "draw_dataset",
    "estimate_scatter",
    "evaluate_fit",
    "fit_scca",
    "kendall_tau_matrix",
    "kkt_violation",
    "lambda_sequence",
    "mixture_scale",
    "nearest_psd",
    "normalize_direction",
    "oos_correlation",
    "predictive_loss",
    "sample_cov",
    "sample_mixture_scaled",
    "sample_normal",
    "sample_t3_scaled",
    "scaled_sscm",
    "selection_rates",
    "sigma_orthonormal_basis",
    "solve_lasso_qp",
    "sparse_direction",
    "spatial_median",
    "spatial_sign",
    "spatial_sign_cov",
]
