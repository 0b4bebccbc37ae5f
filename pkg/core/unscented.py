# core/unscented.py
"""Scaled unscented transform and the matrix square-root helpers it relies on."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .errors import DecompositionError, DimensionError

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-10
JITTER_SCALE = 1e-10


@dataclass(frozen=True)
class UtParams:
    """Scaling coefficients of the sigma-point set."""
    alpha: float = 1e-2
    beta: float = 1.0
    lambda_free: float = 0.0

    def mu(self, n: int) -> float:
        """Spread parameter for a state of dimension ``n``."""
        return self.alpha ** 2 * (n + self.lambda_free) - n

    def validate(self, n: int) -> None:
        if n + self.mu(n) <= 0:
            raise ValueError(
                f"unscented scaling gives n + mu = {n + self.mu(n):.3g} <= 0 "
                f"(alpha={self.alpha}, lambda={self.lambda_free}, n={n})")


@dataclass
class SigmaSet:
    """2n+1 sigma points (rows) with mean and covariance weights."""
    points: np.ndarray
    mean_weights: np.ndarray
    cov_weights: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def center(self) -> np.ndarray:
        return self.points[0]


def ut_weights(n: int, p: UtParams) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance weights for dimension ``n``."""
    p.validate(n)
    mu = p.mu(n)
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + mu)))
    wc = wm.copy()
    wm[0] = mu / (n + mu)
    wc[0] = wm[0] + (1.0 - p.alpha ** 2 + p.beta)
    return wm, wc


def chol_factor(M: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive definite matrix.

    Raises:
        DecompositionError: asymmetric input, or non positive definite with
            the 1-based failing pivot in ``pivot``
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise DecompositionError("matrix is not symmetric")

    factor, info = lapack.dpotrf(M, lower=1, clean=1)
    if info > 0:
        raise DecompositionError(f"matrix is not positive definite (pivot {info})", pivot=int(info))
    if info < 0:
        raise DecompositionError(f"invalid argument {-info} to the Cholesky routine")
    return factor


def chol_with_jitter(M: np.ndarray, label: str = "covariance") -> Tuple[np.ndarray, bool]:
    """
    Cholesky factor with one diagonal-jitter retry of 1e-10 * trace / n.

    Returns:
        (factor, jittered)
    """
    try:
        return chol_factor(M), False
    except DecompositionError as e:
        if e.pivot is None:
            raise
        n = M.shape[0]
        jitter = JITTER_SCALE * abs(np.trace(M)) / n
        logger.warning("%s not positive definite at pivot %d; retrying with jitter %.3e",
                       label, e.pivot, jitter)
        return chol_factor(M + jitter * np.eye(n)), True


def sigma_points(mean: np.ndarray, cov: np.ndarray, p: UtParams,
                 sqrt_cov: Optional[np.ndarray] = None) -> SigmaSet:
    """
    Generate the scaled sigma-point set.

    Args:
        mean: Center (n,)
        cov: SPD covariance (n, n)
        p: Scaling coefficients
        sqrt_cov: Optional precomputed lower square root of ``cov``

    Returns:
        SigmaSet whose rows are mean, mean + columns, mean - columns
    """
    mean = np.asarray(mean, dtype=float)
    n = mean.shape[0]
    wm, wc = ut_weights(n, p)

    if sqrt_cov is None:
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (n, n):
            raise DimensionError(f"covariance shape {cov.shape} does not match mean length {n}")
        # a zero covariance collapses every point onto the mean
        sqrt_cov = np.zeros((n, n)) if not np.any(cov) else chol_factor(cov)

    spread = np.sqrt(n + p.mu(n)) * sqrt_cov
    points = np.vstack([mean, mean + spread.T, mean - spread.T])
    return SigmaSet(points=points, mean_weights=wm, cov_weights=wc)


def ut_propagate(
    s: SigmaSet,
    fn: Callable[[np.ndarray], np.ndarray],
    additive_cov: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Push a sigma set through ``fn``.

    Args:
        s: Sigma set
        fn: Map applied to the (2n+1, n) array of points, returning (2n+1, k)
        additive_cov: Noise covariance added to the output covariance

    Returns:
        (mean, cov, cross_cov) with cross_cov of shape (n, k)
    """
    y = np.asarray(fn(s.points), dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    mean = s.mean_weights @ y
    dy = y - mean
    dx = s.points - s.center
    cov = (s.cov_weights[:, None] * dy).T @ dy
    cross = (s.cov_weights[:, None] * dx).T @ dy
    if additive_cov is not None:
        cov = cov + additive_cov
    return mean, cov, cross


def qr_cov_sqrt(S: np.ndarray) -> np.ndarray:
    """
    Upper-triangular A with AᵀA = S Sᵀ, from the QR decomposition of Sᵀ.

    The diagonal of A is made nonnegative so the factor is unique.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    r = linalg.qr(S.T, mode='r')[0]
    r = r[:n]
    if r.shape[0] < n:
        r = np.vstack([r, np.zeros((n - r.shape[0], n))])
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return signs[:, None] * r
