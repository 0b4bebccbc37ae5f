# estimators/__init__.py
"""Filter variant implementations."""

from typing import Any, Dict, Optional

from .base_estimator import BaseEstimator, COMMON_PARAMS
from .ukf import UKFEstimator
from .aukf import AUKFEstimator
from .mcc_ukf import MCCUKFEstimator
from .mee_ukf import MEEUKFEstimator
from .meef_ukf import MEEFUKFEstimator
from .gmmeef_aukf import GMMEEFAUKFEstimator

ESTIMATORS = {
    'ukf': UKFEstimator,
    'aukf': AUKFEstimator,
    'mcc_ukf': MCCUKFEstimator,
    'mee_ukf': MEEUKFEstimator,
    'meef_ukf': MEEFUKFEstimator,
    'gmmeef_aukf': GMMEEFAUKFEstimator,
}

DEFAULT_ROSTER = ('ukf', 'aukf', 'mcc_ukf', 'mee_ukf', 'meef_ukf', 'gmmeef_aukf')


def create_estimator(kind: str, params: Optional[Dict[str, Any]] = None) -> BaseEstimator:
    """Instantiate a variant by its registry key."""
    try:
        cls = ESTIMATORS[kind]
    except KeyError:
        raise KeyError(f"unknown estimator {kind!r}; choose from {', '.join(ESTIMATORS)}") from None
    return cls(params)


__all__ = [
    'BaseEstimator',
    'COMMON_PARAMS',
    'UKFEstimator',
    'AUKFEstimator',
    'MCCUKFEstimator',
    'MEEUKFEstimator',
    'MEEFUKFEstimator',
    'GMMEEFAUKFEstimator',
    'ESTIMATORS',
    'DEFAULT_ROSTER',
    'create_estimator',
]
