# estimators/mee_ukf.py
"""Minimum error entropy UKF."""

from typing import Any, Dict

from core.criteria import CriterionMode

from .base_estimator import BaseEstimator


class MEEUKFEstimator(BaseEstimator):
    """Fixed-point update driven only by pairwise residual differences."""

    @property
    def name(self) -> str:
        return "Minimum error entropy UKF"

    @property
    def short_name(self) -> str:
        return "MEE-UKF"

    @property
    def description(self) -> str:
        return "Entropy-weighted measurement update with a Gaussian pair kernel."

    @property
    def mode(self) -> CriterionMode:
        return CriterionMode.MEE

    @property
    def adapt_noise(self) -> bool:
        return False

    @property
    def default_params(self) -> Dict[str, Any]:
        return {
            'kappa': 0.0,
            'shape_3': 2.0,
            'bandwidth_3': 8.0,
        }
