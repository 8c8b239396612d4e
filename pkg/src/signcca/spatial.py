"""Spatial signs, the spatial median, and the spatial-sign covariance matrix.

The scaled spatial-sign covariance is the robust scatter estimate at the core
of the package: observations are centered at the spatial median, mapped to
the unit sphere, and the average outer product of the resulting signs is
multiplied by the total dimension p. For elliptical data with trace(sigma_g)
equal to the view dimension this approximates the covariance without any
moment assumptions on the radial part.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_matrix, check_split_col
from .exceptions import ConvergenceWarning
from .types import CovBlocks

#: Distances below this fraction of the data scale count as coincident with
#: the current iterate and are routed through the subgradient safeguard.
_COINCIDENCE_REL_TOL = 1e-10


def spatial_sign(x: np.ndarray) -> np.ndarray:
    """Map a vector to the unit sphere; the zero vector maps to itself."""
    x = np.asarray(x, dtype=np.float64)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return np.zeros_like(x)
    return x / norm


def _row_signs(rows: np.ndarray) -> np.ndarray:
    """Spatial signs of each row; rows that are exactly zero stay zero."""
    norms = np.linalg.norm(rows, axis=1)
    out = np.zeros_like(rows)
    nonzero = norms > 0.0
    out[nonzero] = rows[nonzero] / norms[nonzero, None]
    return out


@dataclass(frozen=True)
class SpatialMedianResult:
    """Converged center plus iteration diagnostics.

    ``n_coincident`` counts the data rows that coincide with the returned
    center (they contribute nothing to the spatial-sign covariance).
    """

    mu_hat: np.ndarray
    iterations: int
    final_step_norm: float
    converged: bool
    n_coincident: int


def _distance_sum(data: np.ndarray, mu: np.ndarray) -> float:
    return float(np.linalg.norm(data - mu, axis=1).sum())


def spatial_median(
    data: np.ndarray, tol: float = 1e-8, max_iter: int = 500
) -> SpatialMedianResult:
    """Minimize the sum of Euclidean distances to the rows of ``data``.

    Runs Weiszfeld iterations safeguarded in the Vardi-Zhang way: when the
    iterate coincides with data points, the update is pulled toward the
    plain Weiszfeld target only as far as the subgradient allows, which
    preserves monotone descent and avoids division by zero. Iteration starts
    at the coordinate-wise median and stops when the relative step drops
    below ``tol``.
    """
    data = as_float_matrix(data, "data", min_rows=2)
    mu = np.median(data, axis=0)

    if np.all(data == data[0]):
        return SpatialMedianResult(
            mu_hat=data[0].copy(),
            iterations=0,
            final_step_norm=0.0,
            converged=True,
            n_coincident=data.shape[0],
        )

    init_dist = np.linalg.norm(data - mu, axis=1)
    coincide_tol = _COINCIDENCE_REL_TOL * max(float(init_dist.max()), 1.0)
    objective = float(init_dist.sum())

    step_norm = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        diff = data - mu
        dist = np.linalg.norm(diff, axis=1)
        near = dist <= coincide_tol
        n_near = int(near.sum())
        if n_near == data.shape[0]:
            converged = True
            step_norm = 0.0
            break

        inv = 1.0 / dist[~near]
        target = (data[~near] * inv[:, None]).sum(axis=0) / inv.sum()
        if n_near == 0:
            new_mu = target
        else:
            pull = (diff[~near] * inv[:, None]).sum(axis=0)
            pull_norm = float(np.linalg.norm(pull))
            if pull_norm <= n_near:
                # Subgradient condition: the current iterate is the minimizer.
                converged = True
                step_norm = 0.0
                break
            weight = n_near / pull_norm
            new_mu = (1.0 - weight) * target + weight * mu

        new_objective = _distance_sum(data, new_mu)
        assert new_objective <= objective * (1.0 + 1e-12) + 1e-12, (
            f"Weiszfeld objective increased: {objective} -> {new_objective}"
        )
        objective = new_objective

        step_norm = float(np.linalg.norm(new_mu - mu))
        mu = new_mu
        if step_norm <= tol * max(1.0, float(np.linalg.norm(mu))):
            converged = True
            break

    if not converged:
        warnings.warn(
            f"spatial median did not reach tol={tol} within {max_iter} iterations "
            f"(last step norm {step_norm:.3e})",
            ConvergenceWarning,
            stacklevel=2,
        )

    final_dist = np.linalg.norm(data - mu, axis=1)
    return SpatialMedianResult(
        mu_hat=mu,
        iterations=iterations,
        final_step_norm=step_norm,
        converged=converged,
        n_coincident=int((final_dist == 0.0).sum()),
    )


def spatial_sign_cov(data: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Average outer product of the spatial signs of the rows centered at ``mu``.

    Rows exactly equal to ``mu`` contribute zero, so the trace equals the
    fraction of rows distinct from ``mu``.
    """
    data = as_float_matrix(data, "data", min_rows=1)
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    if mu.shape[0] != data.shape[1]:
        raise ValueError(f"mu has length {mu.shape[0]}, expected {data.shape[1]}")
    signs = _row_signs(data - mu)
    return signs.T @ signs / data.shape[0]


def scaled_sscm(
    data: np.ndarray,
    split_col: int,
    median_tol: float = 1e-8,
    median_max_iter: int = 500,
) -> CovBlocks:
    """The p-scaled spatial-sign covariance, partitioned at the view boundary.

    Centers at the spatial median, forms the sign covariance, and multiplies
    by p = p1 + p2; the scale follows from assuming trace(sigma_g) equals the
    view dimension rather than estimating it.
    """
    data = as_float_matrix(data, "data", min_rows=2)
    p = data.shape[1]
    check_split_col(p, split_col)
    center = spatial_median(data, tol=median_tol, max_iter=median_max_iter)
    scaled = p * spatial_sign_cov(data, center.mu_hat)
    return CovBlocks.from_joint(
        scaled, split_col, estimator_tag="spatial-sign", scale_applied=float(p)
    )
