"""Core value types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_split_col

#: Scatter estimators available to the solver and harness, keyed by what they
#: compute: the p-scaled spatial-sign covariance, the unbiased sample
#: covariance, and the Kendall-tau bridged correlation matrix.
ESTIMATOR_KINDS = ("spatial-sign", "sample-cov", "kendall")

DATA_SOURCES = ("simulated", "file")


@dataclass(frozen=True)
class Dataset:
    """An n x (p1 + p2) observation matrix with the column split between views.

    ``split_col`` is the number of columns belonging to the first view; the
    remaining columns form the second view.
    """

    data: np.ndarray
    split_col: int
    seed: int | None = None
    source: str = "simulated"
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError(f"data must be 2-D, got ndim={self.data.ndim}")
        if self.data.shape[0] < 2:
            raise ValueError(f"a dataset needs n >= 2 rows, got {self.data.shape[0]}")
        check_split_col(self.data.shape[1], self.split_col)
        if self.source not in DATA_SOURCES:
            raise ValueError(f"source must be one of {DATA_SOURCES}, got {self.source!r}")
        if self.columns is not None and len(self.columns) != self.data.shape[1]:
            raise ValueError(
                f"got {len(self.columns)} column names for {self.data.shape[1]} columns"
            )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def p1(self) -> int:
        return self.split_col

    @property
    def p2(self) -> int:
        return self.data.shape[1] - self.split_col

    def view1(self) -> np.ndarray:
        return self.data[:, : self.split_col]

    def view2(self) -> np.ndarray:
        return self.data[:, self.split_col :]


@dataclass(frozen=True)
class CovBlocks:
    """An estimated joint scatter matrix partitioned at the view boundary.

    ``s1`` and ``s2`` are the within-view blocks, ``s12`` the cross block.
    ``estimator_tag`` identifies which estimator produced the blocks and
    ``scale_applied`` records any global rescaling (p for the scaled
    spatial-sign covariance, 1 otherwise).
    """

    s1: np.ndarray
    s12: np.ndarray
    s2: np.ndarray
    estimator_tag: str
    scale_applied: float = 1.0

    def __post_init__(self):
        if self.estimator_tag not in ESTIMATOR_KINDS:
            raise ValueError(
                f"estimator_tag must be one of {ESTIMATOR_KINDS}, got {self.estimator_tag!r}"
            )
        p1, p2 = self.s1.shape[0], self.s2.shape[0]
        if self.s1.shape != (p1, p1) or self.s2.shape != (p2, p2):
            raise ValueError("s1 and s2 must be square")
        if self.s12.shape != (p1, p2):
            raise ValueError(
                f"s12 must have shape ({p1}, {p2}), got {self.s12.shape}"
            )
        for name, block in (("s1", self.s1), ("s2", self.s2)):
            if not np.allclose(block, block.T, atol=1e-8, rtol=0.0):
                raise ValueError(f"{name} is not symmetric")

    @property
    def p1(self) -> int:
        return self.s1.shape[0]

    @property
    def p2(self) -> int:
        return self.s2.shape[0]

    def full(self) -> np.ndarray:
        """Assemble the joint (p1 + p2) x (p1 + p2) matrix."""
        top = np.hstack([self.s1, self.s12])
        bottom = np.hstack([self.s12.T, self.s2])
        return np.vstack([top, bottom])

    @classmethod
    def from_joint(
        cls, joint: np.ndarray, split_col: int, estimator_tag: str, scale_applied: float = 1.0
    ) -> "CovBlocks":
        """Partition a joint scatter matrix at ``split_col``."""
        p = joint.shape[0]
        k = check_split_col(p, split_col)
        return cls(
            s1=joint[:k, :k],
            s12=joint[:k, k:],
            s2=joint[k:, k:],
            estimator_tag=estimator_tag,
            scale_applied=scale_applied,
        )
