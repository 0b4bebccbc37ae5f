# estimators/aukf.py
"""Adaptive UKF: standard gain plus Sage-Husa noise estimation."""

from core.criteria import CriterionMode

from .base_estimator import BaseEstimator


class AUKFEstimator(BaseEstimator):

    @property
    def name(self) -> str:
        return "Adaptive unscented Kalman filter"

    @property
    def short_name(self) -> str:
        return "AUKF"

    @property
    def description(self) -> str:
        return "UKF whose process and measurement noise estimates follow a Sage-Husa recursion."

    @property
    def mode(self) -> CriterionMode:
        return CriterionMode.GAUSSIAN

    @property
    def adapt_noise(self) -> bool:
        return True
