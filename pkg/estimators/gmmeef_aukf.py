# estimators/gmmeef_aukf.py
"""Generalized mixture error entropy with fiducial points, adaptive UKF."""

from core.criteria import CriterionMode

from .base_estimator import BaseEstimator


class GMMEEFAUKFEstimator(BaseEstimator):
    """
    Robust adaptive filter.

    The measurement update minimizes a mixture of two generalized Gaussian
    correntropy terms and a generalized Gaussian error-entropy term over the
    whitened augmented regression. Noise covariances follow Sage-Husa.

    Parameters:
    - kappa: Share of the correntropy part (rest goes to entropy)
    - phi: Mix of the two correntropy kernels
    - shape_k / bandwidth_k: Kernel k (1, 2 correntropy; 3 entropy)
    - theta: Forgetting factor (or constant weight) of the noise recursion
    """

    @property
    def name(self) -> str:
        return "GMMEEF adaptive UKF"

    @property
    def short_name(self) -> str:
        return "GMMEEF-AUKF"

    @property
    def description(self) -> str:
        return "Mixture-kernel error entropy update with fiducial points and Sage-Husa adaptation."

    @property
    def mode(self) -> CriterionMode:
        return CriterionMode.GMMEEF

    @property
    def adapt_noise(self) -> bool:
        return True
