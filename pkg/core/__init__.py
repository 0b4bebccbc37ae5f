# core/__init__.py
"""Core functionality modules."""

__version__ = "0.1.0"

from .casefile import PowerNetwork, parse_cdf
from .case_loader import CaseLoader
from .psmodel import MeasurementPlan, PowerSystemModel, simulate_truth
from .filters import FilterConfig, FilterState, run_filter
from .noisegen import Scenario, scenario_preset
from .isga import OptimizerConfig, Variant, run
from .metrics import ErrorMetrics, RmseConvention, armse
from .harness import ExperimentSpec, RunReport, run_experiment

__all__ = [
    '__version__',
    'PowerNetwork',
    'parse_cdf',
    'CaseLoader',
    'MeasurementPlan',
    'PowerSystemModel',
    'simulate_truth',
    'FilterConfig',
    'FilterState',
    'run_filter',
    'Scenario',
    'scenario_preset',
    'OptimizerConfig',
    'Variant',
    'run',
    'ErrorMetrics',
    'RmseConvention',
    'armse',
    'ExperimentSpec',
    'RunReport',
    'run_experiment',
]
