# core/criteria.py
"""Generalized-Gaussian kernels, the mixture error-entropy cost and its fixed-point weights."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple, Union

import numpy as np
from scipy.special import gamma

from .errors import SingularWeightError

DEFAULT_ENTROPY_FLOOR = 1e-8


class CriterionMode(str, Enum):
    GMMEEF = "GMMEEF"
    MEEF = "MEEF"
    MEE = "MEE"
    MCC = "MCC"
    GAUSSIAN = "GAUSSIAN"


class LambdaPrefactor(str, Enum):
    AS_PRINTED = "as_printed"            # alpha / beta**alpha
    KERNEL_GRADIENT = "kernel_gradient"  # alpha / beta


@dataclass(frozen=True)
class KernelParams:
    """Shape and bandwidth of a generalized Gaussian kernel exp(-|e|^shape / bandwidth)."""
    shape: float
    bandwidth: float

    def __post_init__(self):
        if not self.shape > 0 or not self.bandwidth > 0:
            raise ValueError(f"kernel shape and bandwidth must be positive, got {self.shape}, {self.bandwidth}")
        if not np.isfinite(self.normalization):
            raise ValueError(f"kernel normalization is not finite for shape {self.shape}")

    @property
    def normalization(self) -> float:
        return self.shape / (2.0 * self.bandwidth * gamma(1.0 / self.shape))


@dataclass(frozen=True)
class CriterionConfig:
    """
    Coefficients of the mixture error-entropy criterion.

    ``kappa`` weights the fiducial (correntropy) part against the entropy
    part; ``phi`` mixes the two fiducial kernels. The classical criteria are
    special settings, checked against ``mode``.
    """
    kappa: float = 0.5
    phi: float = 0.5
    fiducial_kernel_1: KernelParams = field(default_factory=lambda: KernelParams(2.1, 6.3))
    fiducial_kernel_2: KernelParams = field(default_factory=lambda: KernelParams(2.1, 6.3))
    entropy_kernel: KernelParams = field(default_factory=lambda: KernelParams(2.9, 3.2))
    mode: CriterionMode = CriterionMode.GMMEEF
    lambda_prefactor: LambdaPrefactor = LambdaPrefactor.AS_PRINTED
    entropy_floor: float = DEFAULT_ENTROPY_FLOOR

    def __post_init__(self):
        object.__setattr__(self, 'mode', CriterionMode(self.mode))
        object.__setattr__(self, 'lambda_prefactor', LambdaPrefactor(self.lambda_prefactor))
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self) -> list:
        """Return validation messages (empty if valid)."""
        errors = []
        if not 0.0 <= self.kappa <= 1.0:
            errors.append(f"kappa must lie in [0, 1], got {self.kappa}")
        if not 0.0 <= self.phi <= 1.0:
            errors.append(f"phi must lie in [0, 1], got {self.phi}")
        if self.entropy_floor < 0:
            errors.append("entropy_floor must be non-negative")

        k1, k2, k3 = self.fiducial_kernel_1, self.fiducial_kernel_2, self.entropy_kernel
        if self.mode == CriterionMode.MCC:
            if self.kappa != 1.0:
                errors.append("MCC mode requires kappa = 1")
            if k1.shape != 2.0 or k2.shape != 2.0:
                errors.append("MCC mode requires Gaussian-shape fiducial kernels")
            if 0.0 < self.phi < 1.0 and k1.bandwidth != k2.bandwidth:
                errors.append("MCC mode requires a single kernel (equal bandwidths or phi in {0, 1})")
        elif self.mode == CriterionMode.MEE:
            if self.kappa != 0.0:
                errors.append("MEE mode requires kappa = 0")
            if k3.shape != 2.0:
                errors.append("MEE mode requires a Gaussian-shape entropy kernel")
        elif self.mode == CriterionMode.MEEF:
            if self.phi != 1.0:
                errors.append("MEEF mode requires phi = 1")
            if k1.shape != 2.0 or k3.shape != 2.0:
                errors.append("MEEF mode requires Gaussian-shape kernels")
        return errors

    @property
    def uses_fixed_point(self) -> bool:
        return self.mode != CriterionMode.GAUSSIAN


@dataclass
class WeightMatrices:
    """Diagonal fiducial weights, entropy weights and their combination Ω."""
    lambda_diag: np.ndarray
    phi_diag: np.ndarray
    xi: np.ndarray
    omega: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        return np.diag(self.lambda_diag)

    @property
    def phi(self) -> np.ndarray:
        return np.diag(self.phi_diag)

    def blocks(self, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Partition Ω around the state/measurement split.

        Returns:
            (uu n×n, vu n×m top-right, uv m×n bottom-left, vv m×m)
        """
        om = self.omega
        return om[:n, :n], om[:n, n:], om[n:, :n], om[n:, n:]


def gg_kernel(e: Union[float, np.ndarray], k: KernelParams) -> Union[float, np.ndarray]:
    """Generalized Gaussian kernel value(s)."""
    return k.normalization * np.exp(-np.abs(e) ** k.shape / k.bandwidth)


def gmmeef_cost(errors: np.ndarray, c: CriterionConfig) -> float:
    """Mixture fiducial correntropy plus pairwise entropy term of an error vector."""
    e = np.asarray(errors, dtype=float).ravel()
    if e.size < 1:
        raise ValueError("cost needs at least one error")
    fiducial = np.sum(c.phi * gg_kernel(e, c.fiducial_kernel_1)
                      + (1.0 - c.phi) * gg_kernel(e, c.fiducial_kernel_2))
    total = c.kappa * fiducial
    if c.kappa < 1.0:
        gaps = e[None, :] - e[:, None]
        total += (1.0 - c.kappa) * np.sum(gg_kernel(gaps, c.entropy_kernel))
    return float(total)


def _powered(magnitude: np.ndarray, exponent: float, floor: float, what: str) -> np.ndarray:
    """|x|**exponent, flooring |x| when the exponent is negative."""
    if exponent >= 0:
        return magnitude ** exponent
    if floor > 0:
        return np.maximum(magnitude, floor) ** exponent
    if np.any(magnitude == 0):
        raise SingularWeightError(f"{what} weights diverge at zero error with shape < 2 and no floor")
    return magnitude ** exponent


def _prefactor(k: KernelParams, rule: LambdaPrefactor) -> float:
    if rule == LambdaPrefactor.KERNEL_GRADIENT:
        return k.shape / k.bandwidth
    return k.shape / k.bandwidth ** k.shape


def weight_matrices(errors: np.ndarray, c: CriterionConfig) -> WeightMatrices:
    """
    Weights of the fixed-point iteration for the whitened residual ``errors``.

    Self-pairs are excluded from the entropy weights; they cancel in Φ - Ξ.
    All weights are clamped at zero.

    Args:
        errors: Whitened residual vector of length n + m
        c: Criterion coefficients

    Returns:
        WeightMatrices with Ω = κΛ + (1-κ)(Φ - Ξ)
    """
    e = np.asarray(errors, dtype=float).ravel()
    size = e.size
    mag = np.abs(e)

    lam = np.zeros(size)
    if c.kappa > 0.0:
        for share, k in ((c.phi, c.fiducial_kernel_1), (1.0 - c.phi, c.fiducial_kernel_2)):
            if share == 0.0:
                continue
            lam += (share * _prefactor(k, c.lambda_prefactor) * gg_kernel(e, k)
                    * _powered(mag, k.shape - 2.0, c.entropy_floor, "fiducial"))
        lam = np.maximum(lam, 0.0)

    xi = np.zeros((size, size))
    phi_diag = np.zeros(size)
    if c.kappa < 1.0:
        k3 = c.entropy_kernel
        off = ~np.eye(size, dtype=bool)

        def pair_weights(gaps: np.ndarray) -> np.ndarray:
            out = np.zeros((size, size))
            out[off] = gg_kernel(gaps[off], k3) * _powered(np.abs(gaps[off]), k3.shape - 2.0,
                                                          c.entropy_floor, "entropy")
            return np.maximum(out, 0.0)

        # xi holds e_j - e_i; phi sums e_i - e_j along the row
        xi = pair_weights(e[None, :] - e[:, None])
        phi_diag = pair_weights(e[:, None] - e[None, :]).sum(axis=1)

    if c.kappa == 1.0:
        omega = np.diag(lam)
    else:
        omega = c.kappa * np.diag(lam) + (1.0 - c.kappa) * (np.diag(phi_diag) - xi)
    return WeightMatrices(lambda_diag=lam, phi_diag=phi_diag, xi=xi, omega=omega)


def diag_weight_row_sums(w: WeightMatrices) -> np.ndarray:
    """Row sums of Φ - Ξ."""
    return w.phi_diag - w.xi.sum(axis=1)
