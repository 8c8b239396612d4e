"""Ground-truth covariance structures and canonical directions for simulations.

Two cross-covariance constructions are provided on top of block-diagonal AR
within-view covariances: Model I plants a single rank-one canonical pair,
Model II adds a random low-rank tail of weaker canonical components so that
the leading pair is only approximately low rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import check_symmetric
from .exceptions import NotPositiveDefiniteError


def check_positive_definite(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Cholesky-based positive-definiteness check; returns the lower factor."""
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefiniteError(f"{name} is not positive-definite") from err


def block_ar_cov(d: int, block_count: int = 5, rho: float = 0.8) -> np.ndarray:
    """Block-diagonal covariance with AR(1) blocks.

    Entry (i, j) equals ``rho ** |i - j|`` when i and j fall in the same block
    and 0 otherwise, giving a unit diagonal (and hence trace d).

    Parameters
    ----------
    d : total dimension, must be divisible by ``block_count``.
    block_count : number of equally sized diagonal blocks.
    rho : within-block correlation decay, in (0, 1).
    """
    if d <= 0:
        raise ValueError(f"d must be positive, got {d}")
    if block_count <= 0:
        raise ValueError(f"block_count must be positive, got {block_count}")
    if d % block_count != 0:
        raise ValueError(f"d={d} is not divisible by block_count={block_count}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must be in (0, 1), got {rho}")

    idx = np.arange(d)
    block_id = idx // (d // block_count)
    same_block = block_id[:, None] == block_id[None, :]
    out = rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
    out[~same_block] = 0.0
    return out


def sparse_direction(d: int) -> np.ndarray:
    """Unit vector with value 1/sqrt(3) at positions 1, 6, 11 (1-based), 0 elsewhere."""
    if d < 11:
        raise ValueError(f"the sparse direction needs d >= 11, got {d}")
    v = np.zeros(d)
    v[[0, 5, 10]] = 1.0 / np.sqrt(3.0)
    return v


def normalize_direction(v: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Rescale ``v`` so that the quadratic form v' sigma v equals one."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if not np.any(v != 0.0):
        raise ValueError("cannot normalize the zero vector")
    q = float(v @ sigma @ v)
    if q <= 0.0:
        raise ValueError(f"quadratic form is not positive ({q}); sigma must be positive-definite")
    return v / np.sqrt(q)


def sigma_orthonormal_basis(
    sigma: np.ndarray,
    exclude: np.ndarray,
    size: int,
    rng: np.random.Generator,
    max_tries: int = 5,
) -> np.ndarray:
    """Random basis W with W' sigma W = I whose columns are sigma-orthogonal to ``exclude``.

    Draws a Gaussian d x size matrix, projects out ``exclude`` under the
    sigma inner product, and orthonormalizes in the whitened coordinates
    (QR there is Gram-Schmidt under the sigma inner product). Near-dependent
    draws trigger a fresh draw, with an error after ``max_tries`` attempts.
    """
    d = sigma.shape[0]
    if not 0 < size < d:
        raise ValueError(f"size must be in (0, {d}), got {size}")
    chol = check_positive_definite(sigma, "sigma")
    u = chol.T @ exclude
    u = u / np.linalg.norm(u)
    for _ in range(max_tries):
        draw = rng.standard_normal((d, size))
        m = chol.T @ draw
        m -= np.outer(u, u @ m)
        q, r = np.linalg.qr(m)
        diag = np.abs(np.diag(r))
        if diag.min() > 1e-10 * max(diag.max(), 1.0):
            return solve_triangular(chol, q, lower=True, trans="T")
    raise np.linalg.LinAlgError(
        f"could not orthonormalize a random basis after {max_tries} draws"
    )


@dataclass(frozen=True)
class JointCovModel:
    """Ground truth for a two-view simulation: covariances, directions, correlation.

    The leading canonical direction pair ``(w1_star, w2_star)`` is normalized
    so that w' sigma w = 1 on each side, and ``rho_star`` is the leading
    canonical correlation they achieve.
    """

    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma12: np.ndarray
    w1_star: np.ndarray
    w2_star: np.ndarray
    rho_star: float
    model_kind: str

    def __post_init__(self):
        p1, p2 = self.sigma1.shape[0], self.sigma2.shape[0]
        if self.sigma12.shape != (p1, p2):
            raise ValueError(f"sigma12 must have shape ({p1}, {p2}), got {self.sigma12.shape}")
        if self.model_kind not in ("I", "II"):
            raise ValueError(f"model_kind must be 'I' or 'II', got {self.model_kind!r}")
        if not 0.0 <= self.rho_star < 1.0:
            raise ValueError(f"rho_star must be in [0, 1), got {self.rho_star}")
        for g, (w, sigma) in enumerate(
            [(self.w1_star, self.sigma1), (self.w2_star, self.sigma2)], start=1
        ):
            q = float(w @ sigma @ w)
            if abs(q - 1.0) > 1e-10:
                raise ValueError(f"w{g}_star' sigma{g} w{g}_star = {q}, expected 1 within 1e-10")
        attained = float(self.w1_star @ self.sigma12 @ self.w2_star)
        if abs(attained - self.rho_star) > 1e-10:
            raise ValueError(
                f"w1_star' sigma12 w2_star = {attained}, expected rho_star = {self.rho_star}"
            )
        check_positive_definite(self.joint(), "joint covariance")

    @property
    def p1(self) -> int:
        return self.sigma1.shape[0]

    @property
    def p2(self) -> int:
        return self.sigma2.shape[0]

    @property
    def p(self) -> int:
        return self.p1 + self.p2

    def joint(self) -> np.ndarray:
        top = np.hstack([self.sigma1, self.sigma12])
        bottom = np.hstack([self.sigma12.T, self.sigma2])
        return np.vstack([top, bottom])


def _resolve_directions(sigma1, sigma2, directions):
    if directions is None:
        v1 = sparse_direction(sigma1.shape[0])
        v2 = sparse_direction(sigma2.shape[0])
    else:
        v1, v2 = directions
    w1 = normalize_direction(v1, sigma1)
    w2 = normalize_direction(v2, sigma2)
    return w1, w2


def build_model_i(
    sigma1: np.ndarray,
    sigma2: np.ndarray,
    rho: float = 0.9,
    directions: tuple[np.ndarray, np.ndarray] | None = None,
) -> JointCovModel:
    """Rank-one cross-covariance: sigma12 = sigma1 w1 rho w2' sigma2.

    ``rho`` is the leading canonical correlation. When ``directions`` is not
    given, the canonical directions come from the three-spike sparse vector
    normalized under each sigma.
    """
    sigma1 = check_symmetric(sigma1, "sigma1")
    sigma2 = check_symmetric(sigma2, "sigma2")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    w1, w2 = _resolve_directions(sigma1, sigma2, directions)
    sigma12 = rho * np.outer(sigma1 @ w1, sigma2 @ w2)
    return JointCovModel(
        sigma1=sigma1,
        sigma2=sigma2,
        sigma12=sigma12,
        w1_star=w1,
        w2_star=w2,
        rho_star=float(rho),
        model_kind="I",
    )


def build_model_ii(
    sigma1: np.ndarray,
    sigma2: np.ndarray,
    rho: float = 0.9,
    extra_rank: int = 50,
    extra_scale: float = 0.1,
    rng: np.random.Generator | int | None = None,
    directions: tuple[np.ndarray, np.ndarray] | None = None,
    max_tries: int = 5,
) -> JointCovModel:
    """Approximately low-rank cross-covariance.

    Adds to the Model I construction a random tail
    sigma1 W1 (extra_scale I) W2' sigma2 built from bases with
    W' sigma W = I whose columns are sigma-orthogonal to the leading
    direction, so the canonical spectrum is {rho, extra_scale x extra_rank}.
    """
    sigma1 = check_symmetric(sigma1, "sigma1")
    sigma2 = check_symmetric(sigma2, "sigma2")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    if extra_scale < 0.0:
        raise ValueError(f"extra_scale must be non-negative, got {extra_scale}")
    d_min = min(sigma1.shape[0], sigma2.shape[0])
    if extra_rank >= d_min:
        raise ValueError(
            f"extra_rank={extra_rank} requires both view dimensions above {extra_rank}"
        )
    rng = np.random.default_rng(rng)
    w1, w2 = _resolve_directions(sigma1, sigma2, directions)
    sigma12 = rho * np.outer(sigma1 @ w1, sigma2 @ w2)
    if extra_scale > 0.0 and extra_rank > 0:
        basis1 = sigma_orthonormal_basis(sigma1, w1, extra_rank, rng, max_tries)
        basis2 = sigma_orthonormal_basis(sigma2, w2, extra_rank, rng, max_tries)
        sigma12 = sigma12 + extra_scale * (sigma1 @ basis1) @ (sigma2 @ basis2).T
    return JointCovModel(
        sigma1=sigma1,
        sigma2=sigma2,
        sigma12=sigma12,
        w1_star=w1,
        w2_star=w2,
        rho_star=float(rho),
        model_kind="II",
    )
