# core/sensitivity.py
"""Coefficient sensitivity analysis module."""

import logging
from dataclasses import replace
from typing import Any, Callable, List, Optional

import pandas as pd

from .harness import ExperimentSpec, run_experiment

logger = logging.getLogger(__name__)


class SensitivityAnalyzer:
    """
    Analyzes how a filter's accuracy changes when one coefficient varies.
    """

    def __init__(self, spec: ExperimentSpec):
        """
        Initialize sensitivity analyzer.

        Args:
            spec: Experiment whose filters provide the base parameters
        """
        self.spec = spec

    def single_param_sweep(
        self,
        filter_name: str,
        param_name: str,
        param_values: List[Any],
        progress_callback: Optional[Callable[[int, int], None]] = None
    ) -> pd.DataFrame:
        """
        Re-run one filter of the experiment with varying values for a single parameter.

        Every value sees the same simulated experiments.

        Args:
            filter_name: Name of the filter in ``spec.estimators``
            param_name: Estimator parameter to vary
            param_values: Values to test
            progress_callback: Optional callback(completed, total)

        Returns:
            DataFrame with one row per value: the parameter itself, armse_v,
            armse_phi, mean_step_ms, fallbacks (NaN metrics where the value is invalid)
        """
        if filter_name not in self.spec.estimators:
            raise KeyError(f"unknown filter {filter_name!r}")
        base = self.spec.estimators[filter_name]
        if param_name not in base.params:
            raise KeyError(f"unknown parameter {param_name!r} for {filter_name}")

        results = []
        total = len(param_values)
        for i, value in enumerate(param_values):
            row = {param_name: value}
            estimator = base.with_params({param_name: value})
            problems = estimator.validate_params()
            if problems:
                logger.warning("%s=%s skipped: %s", param_name, value, "; ".join(problems))
                row.update({'armse_v': float('nan'), 'armse_phi': float('nan'),
                            'mean_step_ms': float('nan'), 'fallbacks': 0})
            else:
                report = run_experiment(replace(self.spec, estimators={filter_name: estimator}))
                summary = report.filters[filter_name]
                row.update({
                    'armse_v': summary.metrics.armse_v,
                    'armse_phi': summary.metrics.armse_phi,
                    'mean_step_ms': summary.mean_step_ms,
                    'fallbacks': summary.fallbacks,
                })
            results.append(row)

            if progress_callback:
                progress_callback(i + 1, total)

        return pd.DataFrame(results)
