# estimators/mcc_ukf.py
"""Maximum correntropy UKF."""

from typing import Any, Dict

from core.criteria import CriterionMode

from .base_estimator import BaseEstimator


class MCCUKFEstimator(BaseEstimator):
    """
    Fixed-point update under a single Gaussian correntropy kernel.

    Every whitened residual is weighted by its kernel value, so large
    residuals lose influence on the gain.
    """

    @property
    def name(self) -> str:
        return "Maximum correntropy UKF"

    @property
    def short_name(self) -> str:
        return "MCC-UKF"

    @property
    def description(self) -> str:
        return "Correntropy-weighted measurement update with a Gaussian kernel."

    @property
    def mode(self) -> CriterionMode:
        return CriterionMode.MCC

    @property
    def adapt_noise(self) -> bool:
        return False

    @property
    def default_params(self) -> Dict[str, Any]:
        return {
            'kappa': 1.0,
            'phi': 1.0,
            'shape_1': 2.0,
            'shape_2': 2.0,
            'bandwidth_1': 8.0,
            'bandwidth_2': 8.0,
        }
