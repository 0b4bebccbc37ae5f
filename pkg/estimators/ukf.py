# estimators/ukf.py
"""Plain unscented Kalman filter with fixed noise covariances."""

from core.criteria import CriterionMode

from .base_estimator import BaseEstimator


class UKFEstimator(BaseEstimator):
    """Standard gain, no noise adaptation."""

    @property
    def name(self) -> str:
        return "Unscented Kalman filter"

    @property
    def short_name(self) -> str:
        return "UKF"

    @property
    def description(self) -> str:
        return "Sigma-point filter with the standard Kalman gain and fixed Q, R."

    @property
    def mode(self) -> CriterionMode:
        return CriterionMode.GAUSSIAN

    @property
    def adapt_noise(self) -> bool:
        return False
