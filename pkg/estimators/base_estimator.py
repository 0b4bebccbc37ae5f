# estimators/base_estimator.py
"""Base estimator class for all filter variants."""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

import numpy as np

from core.criteria import CriterionConfig, CriterionMode, KernelParams
from core.filters import ConfigSchedule, EstimationResult, FilterConfig, FilterState, StateSpaceModel, run_filter
from core.unscented import UtParams

# Flat parameter set shared by every variant; variants override the defaults.
COMMON_PARAMS: Dict[str, Any] = {
    'ut_alpha': 1e-2,
    'ut_beta': 1.0,
    'ut_lambda': 0.0,
    'kappa': 0.5,
    'phi': 0.5,
    'shape_1': 2.1,
    'shape_2': 2.1,
    'shape_3': 2.9,
    'bandwidth_1': 6.3,
    'bandwidth_2': 6.3,
    'bandwidth_3': 3.2,
    'theta_mode': 'forgetting',
    'theta': 0.5,
    'fixed_point_tol': 1e-6,
    'fixed_point_max_iters': 100,
    'fallback_on_divergence': True,
    'lambda_prefactor': 'as_printed',
    'entropy_floor': 1e-8,
}


class BaseEstimator(ABC):
    """
    Abstract base class for all filter variants.

    All variants must implement:
    - name: Display name
    - short_name: Label used in report rows
    - description: Variant description
    - mode: Measurement-update criterion
    - adapt_noise: Whether Sage-Husa adaptation runs
    - default_params: Parameter values that differ from COMMON_PARAMS
    """

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        """
        Initialize estimator with optional custom parameters.

        Args:
            params: Custom parameters to override defaults
        """
        self.params = {**COMMON_PARAMS, **self.default_params}
        if params:
            unknown = set(params) - set(self.params)
            if unknown:
                raise KeyError(f"unknown estimator parameter(s): {', '.join(sorted(unknown))}")
            self.params.update(params)

    @property
    @abstractmethod
    def name(self) -> str:
        """Variant display name."""
        pass

    @property
    @abstractmethod
    def short_name(self) -> str:
        """Short label for tables (e.g. 'UKF')."""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        pass

    @property
    @abstractmethod
    def mode(self) -> CriterionMode:
        pass

    @property
    @abstractmethod
    def adapt_noise(self) -> bool:
        pass

    @property
    def default_params(self) -> Dict[str, Any]:
        """Defaults that differ from COMMON_PARAMS."""
        return {}

    def get_param(self, key: str) -> Any:
        """Get a parameter value."""
        return self.params.get(key)

    def criterion_config(self) -> CriterionConfig:
        p = self.params
        return CriterionConfig(
            kappa=float(p['kappa']),
            phi=float(p['phi']),
            fiducial_kernel_1=KernelParams(float(p['shape_1']), float(p['bandwidth_1'])),
            fiducial_kernel_2=KernelParams(float(p['shape_2']), float(p['bandwidth_2'])),
            entropy_kernel=KernelParams(float(p['shape_3']), float(p['bandwidth_3'])),
            mode=self.mode,
            lambda_prefactor=p['lambda_prefactor'],
            entropy_floor=float(p['entropy_floor']),
        )

    def build_config(self) -> FilterConfig:
        """
        Translate the flat parameters into a FilterConfig.

        Raises:
            ValueError: inconsistent parameters
        """
        p = self.params
        return FilterConfig(
            ut=UtParams(alpha=float(p['ut_alpha']), beta=float(p['ut_beta']), lambda_free=float(p['ut_lambda'])),
            criterion=self.criterion_config(),
            adapt_noise=self.adapt_noise,
            theta_mode=p['theta_mode'],
            theta=float(p['theta']),
            fixed_point_tol=float(p['fixed_point_tol']),
            fixed_point_max_iters=int(p['fixed_point_max_iters']),
            fallback_on_divergence=bool(p['fallback_on_divergence']),
        )

    def validate_params(self) -> List[str]:
        """
        Validate current parameters.

        Returns:
            List of validation error messages (empty if valid)
        """
        try:
            self.build_config()
        except ValueError as e:
            return [str(e)]
        return []

    def run(self, model: StateSpaceModel, measurements: np.ndarray, initial: FilterState,
            schedule: Optional[ConfigSchedule] = None) -> EstimationResult:
        """Filter one measurement sequence with this variant."""
        return run_filter(model, measurements, self.build_config(), initial, schedule=schedule)

    def with_params(self, overrides: Dict[str, Any]) -> "BaseEstimator":
        """Copy of this estimator with some parameters replaced."""
        return type(self)({**self.params, **overrides})

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(params={self.params})"
