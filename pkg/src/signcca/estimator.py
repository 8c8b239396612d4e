"""Scikit-learn style front end for the sparse CCA solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_float_matrix, check_paired_rows
from .scatter import estimate_scatter
from .solver import BIC_CRITERIA, SolverOptions, fit_scca
from .types import ESTIMATOR_KINDS


class SparseCCA(BaseEstimator):
    """Sparse canonical correlation analysis with a pluggable scatter estimator.

    Fits the leading pair of sparse canonical directions between two views
    by alternating l1-penalized quadratic minimization, with the penalty
    level chosen by a BIC criterion along a geometric path. The ``scatter``
    parameter selects the joint scatter estimate the solver runs on:
    ``"spatial-sign"`` (robust, the default), ``"sample-cov"``, or
    ``"kendall"``.

    Parameters
    ----------
    scatter : which scatter estimator to run the solver on.
    criterion : "bic1" or "bic2" penalty selection criterion.
    n_lambda, lambda_ratio : length and depth of the geometric penalty path.
    lasso_tol, max_sweeps : inner coordinate-descent stopping rules.
    outer_tol, max_outer : alternating-loop stopping rules.
    scatter_params : extra keyword arguments for the scatter estimator,
        e.g. ``{"psd_project": True}`` for "kendall".

    Attributes
    ----------
    w1_ , w2_ : fitted direction vectors (exact zeros mark dropped variables).
    rho_ : in-sample canonical correlation under the estimated scatter.
    lambda1_, lambda2_ : selected penalty levels.
    n_iter_ : outer alternating iterations run.
    converged_ : whether the alternating loop reached its tolerance.
    fit_ : the full solver result with BIC traces.
    """

    def __init__(
        self,
        scatter: str = "spatial-sign",
        criterion: str = "bic1",
        n_lambda: int = 20,
        lambda_ratio: float = 0.01,
        lasso_tol: float = 1e-7,
        max_sweeps: int = 10_000,
        outer_tol: float = 1e-5,
        max_outer: int = 100,
        scatter_params: dict | None = None,
    ):
        self.scatter = scatter
        self.criterion = criterion
        self.n_lambda = n_lambda
        self.lambda_ratio = lambda_ratio
        self.lasso_tol = lasso_tol
        self.max_sweeps = max_sweeps
        self.outer_tol = outer_tol
        self.max_outer = max_outer
        self.scatter_params = scatter_params

    def _options(self) -> SolverOptions:
        return SolverOptions(
            n_lambda=self.n_lambda,
            lambda_ratio=self.lambda_ratio,
            lasso_tol=self.lasso_tol,
            max_sweeps=self.max_sweeps,
            outer_tol=self.outer_tol,
            max_outer=self.max_outer,
        )

    def _validate_views(self, X, Y):
        X = as_float_matrix(X, "X", min_rows=2)
        Y = as_float_matrix(Y, "Y", min_rows=2)
        check_paired_rows(X, Y)
        return X, Y

    def fit(self, X, Y):
        """Fit the sparse canonical pair between views ``X`` and ``Y``."""
        if self.scatter not in ESTIMATOR_KINDS:
            raise ValueError(
                f"scatter must be one of {ESTIMATOR_KINDS}, got {self.scatter!r}"
            )
        if self.criterion not in BIC_CRITERIA:
            raise ValueError(
                f"criterion must be one of {BIC_CRITERIA}, got {self.criterion!r}"
            )
        X, Y = self._validate_views(X, Y)
        data = np.hstack([X, Y])
        blocks = estimate_scatter(
            data, X.shape[1], self.scatter, **(self.scatter_params or {})
        )
        fit = fit_scca(blocks, n=data.shape[0], criterion=self.criterion, options=self._options())
        self.fit_ = fit
        self.w1_ = fit.w1_hat
        self.w2_ = fit.w2_hat
        self.rho_ = fit.rho_in_sample
        self.lambda1_ = fit.lambda1
        self.lambda2_ = fit.lambda2
        self.n_iter_ = fit.outer_iterations
        self.converged_ = fit.converged
        self.n_features_in_ = data.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "w1_"):
            raise NotFittedError("this SparseCCA instance is not fitted yet")

    def transform(self, X, Y=None):
        """Project onto the fitted directions.

        Returns the first-view scores, or a (scores1, scores2) pair when
        ``Y`` is given.
        """
        self._check_fitted()
        X = as_float_matrix(X, "X", min_rows=1)
        if X.shape[1] != self.w1_.shape[0]:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.w1_.shape[0]}")
        scores1 = X @ self.w1_
        if Y is None:
            return scores1
        Y = as_float_matrix(Y, "Y", min_rows=1)
        if Y.shape[1] != self.w2_.shape[0]:
            raise ValueError(f"Y has {Y.shape[1]} columns, expected {self.w2_.shape[0]}")
        return scores1, Y @ self.w2_

    def fit_transform(self, X, Y):
        return self.fit(X, Y).transform(X, Y)

    def score(self, X, Y):
        """Absolute Pearson correlation of the two canonical variates on (X, Y)."""
        self._check_fitted()
        scores1, scores2 = self.transform(X, Y)
        if scores1.std() == 0.0 or scores2.std() == 0.0:
            return 0.0
        return float(abs(np.corrcoef(scores1, scores2)[0, 1]))
