"""Evaluation metrics: out-of-sample correlation, predictive loss, selection rates.

One convention needs flagging: ``selection_rates`` defaults to formulas in
which the "false positive rate" is the share of truly active variables that
were missed and the "false negative rate" is the share of truly inactive
variables that were selected. These are label-swapped relative to the usual
convention; pass ``convention="conventional"`` for the usual reading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cov_models import JointCovModel
from .exceptions import MetricUndefinedError
from .types import CovBlocks


@dataclass(frozen=True)
class EvalReport:
    """All per-fit evaluation quantities against a ground-truth model."""

    rho_hat: float
    abs_rho_gap: float
    loss1: float
    loss2: float
    fpr1: float
    fnr1: float
    fpr2: float
    fnr2: float
    cos2_angle1: float
    cos2_angle2: float


def _scatter_triple(ref) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(ref, JointCovModel):
        return ref.sigma1, ref.sigma12, ref.sigma2
    if isinstance(ref, CovBlocks):
        return ref.s1, ref.s12, ref.s2
    raise TypeError(f"expected a JointCovModel or CovBlocks, got {type(ref).__name__}")


def oos_correlation(w1: np.ndarray, w2: np.ndarray, ref) -> float:
    """Absolute correlation of the two projections under a reference scatter.

    ``ref`` may be the ground-truth model or blocks estimated on held-out
    data. The value never exceeds the reference's leading canonical
    correlation, with equality at the true directions.
    """
    s1, s12, s2 = _scatter_triple(ref)
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if not np.any(w1) or not np.any(w2):
        raise MetricUndefinedError("correlation is undefined for a zero direction")
    q1 = float(w1 @ s1 @ w1)
    q2 = float(w2 @ s2 @ w2)
    if q1 <= 0.0 or q2 <= 0.0:
        raise MetricUndefinedError(
            f"quadratic forms must be positive, got {q1} and {q2}"
        )
    return float(abs(w1 @ s12 @ w2) / np.sqrt(q1 * q2))


def predictive_loss(w_star: np.ndarray, w_hat: np.ndarray, sigma: np.ndarray) -> float:
    """One minus the sigma-weighted alignment of an estimate with the truth.

    Requires the truth to be normalized (w_star' sigma w_star = 1); the value
    lies in [0, 1] and vanishes exactly when the estimate is proportional to
    the truth.
    """
    w_star = np.asarray(w_star, dtype=np.float64)
    w_hat = np.asarray(w_hat, dtype=np.float64)
    if not np.any(w_hat):
        raise MetricUndefinedError("predictive loss is undefined for a zero direction")
    q_star = float(w_star @ sigma @ w_star)
    if abs(q_star - 1.0) > 1e-6:
        raise ValueError(f"w_star must satisfy w' sigma w = 1, got {q_star}")
    q_hat = float(w_hat @ sigma @ w_hat)
    if q_hat <= 0.0:
        raise MetricUndefinedError(f"w_hat' sigma w_hat must be positive, got {q_hat}")
    value = 1.0 - abs(float(w_hat @ sigma @ w_star)) / np.sqrt(q_hat)
    return float(min(max(value, 0.0), 1.0))


def selection_rates(
    w_star: np.ndarray, w_hat: np.ndarray, convention: str = "printed"
) -> tuple[float, float]:
    """Support-recovery rates of an estimate against the true direction.

    With the default ``"printed"`` convention,
    FPR = 1 - #{estimated and truly active} / #{truly active} and
    FNR = 1 - #{estimated and truly inactive} / #{truly inactive};
    ``"conventional"`` swaps the two labels. Zero detection is exact: the
    solver produces exact zeros, so no threshold is applied.
    """
    if convention not in ("printed", "conventional"):
        raise ValueError(f"convention must be 'printed' or 'conventional', got {convention!r}")
    star_active = np.asarray(w_star) != 0.0
    hat_active = np.asarray(w_hat) != 0.0
    n_active = int(star_active.sum())
    n_inactive = int((~star_active).sum())
    if n_active == 0 or n_inactive == 0:
        raise MetricUndefinedError(
            "selection rates need the truth to have both zero and non-zero entries"
        )
    miss_rate = 1.0 - float((hat_active & star_active).sum()) / n_active
    alarm_rate = 1.0 - float((~hat_active & ~star_active).sum()) / n_inactive
    if convention == "printed":
        return miss_rate, alarm_rate
    return alarm_rate, miss_rate


def cos2_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Squared cosine of the angle between two non-zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(u @ u)
    nv = float(v @ v)
    if nu == 0.0 or nv == 0.0:
        raise MetricUndefinedError("the angle to a zero vector is undefined")
    value = float(u @ v) ** 2 / (nu * nv)
    return float(min(value, 1.0))


def evaluate_fit(w1_hat: np.ndarray, w2_hat: np.ndarray, model: JointCovModel) -> EvalReport:
    """Score a fitted direction pair against the generating model."""
    rho_hat = oos_correlation(w1_hat, w2_hat, model)
    fpr1, fnr1 = selection_rates(model.w1_star, w1_hat)
    fpr2, fnr2 = selection_rates(model.w2_star, w2_hat)
    return EvalReport(
        rho_hat=rho_hat,
        abs_rho_gap=abs(rho_hat - model.rho_star),
        loss1=predictive_loss(model.w1_star, w1_hat, model.sigma1),
        loss2=predictive_loss(model.w2_star, w2_hat, model.sigma2),
        fpr1=fpr1,
        fnr1=fnr1,
        fpr2=fpr2,
        fnr2=fnr2,
        cos2_angle1=cos2_angle(w1_hat, model.w1_star),
        cos2_angle2=cos2_angle(w2_hat, model.w2_star),
    )


def degenerate_report(model: JointCovModel) -> EvalReport:
    """Scores assigned to a replication whose fit collapsed to zero.

    A zero direction gets the worst predictive loss, a correlation gap equal
    to the true correlation, and the zero-support selection rates, keeping
    aggregates defined while the event is counted separately.
    """
    fpr1, fnr1 = selection_rates(model.w1_star, np.zeros(model.p1))
    fpr2, fnr2 = selection_rates(model.w2_star, np.zeros(model.p2))
    return EvalReport(
        rho_hat=0.0,
        abs_rho_gap=float(model.rho_star),
        loss1=1.0,
        loss2=1.0,
        fpr1=fpr1,
        fnr1=fnr1,
        fpr2=fpr2,
        fnr2=fnr2,
        cos2_angle1=0.0,
        cos2_angle2=0.0,
    )
