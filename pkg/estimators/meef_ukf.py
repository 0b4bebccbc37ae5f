# estimators/meef_ukf.py
"""Minimum error entropy UKF with a fiducial point."""

from typing import Any, Dict

from core.criteria import CriterionMode

from .base_estimator import BaseEstimator


class MEEFUKFEstimator(BaseEstimator):
    """Entropy term anchored at zero error by one Gaussian correntropy kernel."""

    @property
    def name(self) -> str:
        return "Minimum error entropy with fiducial points UKF"

    @property
    def short_name(self) -> str:
        return "MEEF-UKF"

    @property
    def description(self) -> str:
        return "Equal mix of correntropy and error entropy, both with Gaussian kernels."

    @property
    def mode(self) -> CriterionMode:
        return CriterionMode.MEEF

    @property
    def adapt_noise(self) -> bool:
        return False

    @property
    def default_params(self) -> Dict[str, Any]:
        return {
            'kappa': 0.5,
            'phi': 1.0,
            'shape_1': 2.0,
            'shape_2': 2.0,
            'shape_3': 2.0,
            'bandwidth_1': 8.0,
            'bandwidth_2': 8.0,
            'bandwidth_3': 8.0,
        }
