"""Baseline scatter estimators and the common estimation entry point.

The solver only ever sees a ``CovBlocks`` triple, so the three estimators
(the scaled spatial-sign covariance, the sample covariance, and the
Kendall-tau bridged correlation matrix) are interchangeable behind
``estimate_scatter``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import kendalltau

from ._validation import as_float_matrix, check_split_col
from .spatial import scaled_sscm
from .types import ESTIMATOR_KINDS, CovBlocks

#: Above this sample size the O(n^2) sign-matrix route for Kendall's tau is
#: slower and hungrier than per-pair O(n log n) sorting, so we switch.
_PAIRWISE_N_THRESHOLD = 1024

#: Column-chunk cap keeping the sign matrix under ~256 MB of float32.
_SIGN_CHUNK_BYTES = 256 * 2**20


def sample_cov(data: np.ndarray, split_col: int) -> CovBlocks:
    """Unbiased sample covariance (divisor n - 1) of mean-centered columns."""
    data = as_float_matrix(data, "data", min_rows=2)
    check_split_col(data.shape[1], split_col)
    centered = data - data.mean(axis=0)
    joint = centered.T @ centered / (data.shape[0] - 1)
    return CovBlocks.from_joint(joint, split_col, estimator_tag="sample-cov")


def _tau_matrix_vectorized(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tau-b matrix via the pairwise sign matrix.

    Signs are held in float32: every partial sum is an integer bounded by the
    number of row pairs, so the matmul is exact regardless of the reduction
    order. Returns the tau matrix and the per-column untied-pair counts.
    """
    n, p = data.shape
    rows_i, rows_j = np.triu_indices(n, k=1)
    n_pairs = rows_i.shape[0]
    chunk = max(1, int(_SIGN_CHUNK_BYTES // (4 * n_pairs)))

    sign_cols = []
    for start in range(0, p, chunk):
        block = data[:, start : start + chunk]
        sign_cols.append(np.sign(block[rows_i] - block[rows_j]).astype(np.float32))
    signs = np.hstack(sign_cols) if len(sign_cols) > 1 else sign_cols[0]

    concordance = (signs.T @ signs).astype(np.float64)
    untied = np.einsum("ij,ij->j", signs, signs).astype(np.float64)
    denom = np.sqrt(np.outer(untied, untied))
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.where(denom > 0.0, concordance / np.maximum(denom, 1.0), 0.0)
    return tau, untied


def _tau_matrix_pairwise(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tau-b matrix one column pair at a time via merge-sort counting."""
    n, p = data.shape
    tau = np.eye(p)
    n_pairs = n * (n - 1) / 2.0
    untied = np.empty(p)
    for j in range(p):
        col = data[:, j]
        _, tie_counts = np.unique(col, return_counts=True)
        untied[j] = n_pairs - (tie_counts * (tie_counts - 1) / 2.0).sum()
    for j in range(p):
        if untied[j] == 0.0:
            tau[j, j] = 1.0
        for k in range(j + 1, p):
            if untied[j] == 0.0 or untied[k] == 0.0:
                tau[j, k] = tau[k, j] = 0.0
                continue
            value = kendalltau(data[:, j], data[:, k], variant="b").statistic
            tau[j, k] = tau[k, j] = 0.0 if np.isnan(value) else float(value)
    return tau, untied


def nearest_psd(m: np.ndarray) -> np.ndarray:
    """Project a symmetric matrix onto the PSD cone by clipping eigenvalues."""
    sym = 0.5 * (m + m.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals.min() >= 0.0:
        return sym
    clipped = np.clip(eigvals, 0.0, None)
    return (eigvecs * clipped) @ eigvecs.T


def kendall_tau_matrix(
    data: np.ndarray,
    split_col: int,
    psd_project: bool = False,
    method: str = "auto",
) -> CovBlocks:
    """Pairwise Kendall tau-b bridged to a correlation matrix entrywise.

    Each off-diagonal entry is sin(pi * tau / 2), which recovers the Pearson
    correlation for elliptical data; the diagonal is one. Constant columns
    make tau undefined: those entries are set to zero with a warning. The
    bridged matrix need not be PSD; ``psd_project`` clips negative
    eigenvalues for downstream code that cannot tolerate indefiniteness.

    ``method`` picks the tau computation: "vectorized" builds the O(n^2)
    pairwise sign matrix (fastest for the small n used here), "pairwise"
    runs O(n log n) merge-sort counting per column pair, "auto" switches on
    sample size.
    """
    data = as_float_matrix(data, "data", min_rows=2)
    check_split_col(data.shape[1], split_col)
    if method not in ("auto", "vectorized", "pairwise"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "vectorized" if data.shape[0] <= _PAIRWISE_N_THRESHOLD else "pairwise"

    if method == "vectorized":
        tau, untied = _tau_matrix_vectorized(data)
    else:
        tau, untied = _tau_matrix_pairwise(data)

    constant = np.flatnonzero(untied == 0.0)
    if constant.size:
        warnings.warn(
            f"Kendall tau is undefined for constant columns {constant.tolist()}; "
            "their correlations are set to 0",
            UserWarning,
            stacklevel=2,
        )

    bridged = np.sin(0.5 * np.pi * tau)
    np.fill_diagonal(bridged, 1.0)
    if psd_project:
        bridged = nearest_psd(bridged)
        np.fill_diagonal(bridged, 1.0)
    return CovBlocks.from_joint(bridged, split_col, estimator_tag="kendall")


def estimate_scatter(data: np.ndarray, split_col: int, kind: str, **kwargs) -> CovBlocks:
    """Estimate the joint scatter with the estimator named by ``kind``.

    Extra keyword arguments are forwarded to the chosen estimator, e.g.
    ``median_tol`` for "spatial-sign" or ``psd_project`` for "kendall".
    """
    if kind == "spatial-sign":
        return scaled_sscm(data, split_col, **kwargs)
    if kind == "sample-cov":
        return sample_cov(data, split_col, **kwargs)
    if kind == "kendall":
        return kendall_tau_matrix(data, split_col, **kwargs)
    raise ValueError(f"unknown scatter estimator {kind!r}; expected one of {ESTIMATOR_KINDS}")
