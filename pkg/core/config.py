# core/config.py
"""Run configuration: YAML file validated into pydantic models, plus builders for the runtime objects."""

import hashlib
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .case_loader import CaseLoader
from .errors import ConfigError
from .harness import ExperimentSpec, InitializationSpec
from .isga import OptimizerConfig, SgaDamping, TailTerm, Variant
from .metrics import RmseConvention
from .noisegen import Scenario, scenario_preset
from .psmodel import (
    DEFAULT_LEVEL_COEFF,
    DEFAULT_MAGNITUDE_FLOOR,
    DEFAULT_TREND_COEFF,
    MeasurementPlan,
    PowerSystemModel,
)
from .tuning import PARAM_KEYS, SearchBounds, TuningVector, schedule_configs

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_CASE = "data/cases/ieee14cdf.txt"


class _Block(BaseModel):
    model_config = ConfigDict(extra='forbid')


class NetworkBlock(_Block):
    case: str = Field(DEFAULT_CASE, description="IEEE common-format case file (or its JSON dump)")
    measurement_plan: Optional[List[str]] = Field(
        None, description="meter descriptors such as 'V 3', 'Pinj 4', 'Qflow 2-5'; default: all")
    level_coeff: float = Field(DEFAULT_LEVEL_COEFF, ge=0.0, le=1.0, description="Holt level coefficient")
    trend_coeff: float = Field(DEFAULT_TREND_COEFF, ge=0.0, le=1.0, description="Holt trend coefficient")
    magnitude_floor: float = Field(DEFAULT_MAGNITUDE_FLOOR, gt=0.0,
                                   description="lower clip of simulated voltage magnitudes")
    cache_dir: Optional[str] = Field(None, description="directory for parsed-case JSON cache")


class BadDataEventBlock(_Block):
    t: int = Field(..., ge=1, description="1-based step of the corruption")
    multiplier: float = Field(..., description="factor applied to every power reading at t")


class ScenarioBlock(_Block):
    preset: Literal['noise-free', 'scenario1', 'scenario2', 'scenario3', 'scenario4'] = Field(
        'scenario1', description="noise scenario")
    process_variance: float = Field(1e-5, ge=0.0, description="Gaussian process noise variance (scenarios 1, 4)")
    measurement_variance: float = Field(1e-2, ge=0.0,
                                        description="Gaussian measurement noise variance (scenarios 1, 4)")
    impulse_prob: float = Field(0.05, ge=0.0, le=1.0, description="per-component impulse probability")
    impulse_scale: float = Field(10.0, gt=0.0, description="impulse std as a multiple of the base std")
    impulse_fraction: float = Field(0.1, gt=0.0, le=1.0,
                                    description="share of components eligible for an impulse per step")
    bad_data: Optional[List[BadDataEventBlock]] = Field(
        None, description="bad-data events for scenario4; default t=20 x1.15, t=40 x0.85")


class InitializationBlock(_Block):
    p0: float = Field(1e-2, gt=0.0, description="initial state covariance scale")
    q0: float = Field(1e-5, ge=0.0, description="initial process noise estimate scale")
    r0: float = Field(1e-2, gt=0.0, description="initial measurement noise estimate scale")
    perturb_initial: bool = Field(True, description="draw the initial estimate around the true start")


class FilterBlock(_Block):
    kind: Literal['ukf', 'aukf', 'mcc_ukf', 'mee_ukf', 'meef_ukf', 'gmmeef_aukf'] = Field(
        ..., description="filter variant")
    params: Dict[str, Any] = Field(default_factory=dict, description="estimator parameter overrides")
    overlay: Optional[str] = Field(None, description="tuning overlay file whose params are applied last")


def _default_filters() -> Dict[str, FilterBlock]:
    return {
        'UKF': FilterBlock(kind='ukf'),
        'AUKF': FilterBlock(kind='aukf'),
        'MCC-UKF': FilterBlock(kind='mcc_ukf'),
        'MEE-UKF': FilterBlock(kind='mee_ukf'),
        'MEEF-UKF': FilterBlock(kind='meef_ukf'),
        'GMMEEF-AUKF': FilterBlock(kind='gmmeef_aukf'),
    }


class ExperimentBlock(_Block):
    runs: int = Field(200, ge=1, description="Monte Carlo experiments D")
    horizon: int = Field(60, ge=1, description="steps per experiment T")
    base_seed: int = Field(0, ge=0, description="seed of every random stream")
    rmse_convention: RmseConvention = Field(RmseConvention.AS_PRINTED,
                                            description="as_printed (sum over time / N) or inside_root")
    bus_count: Optional[int] = Field(None, ge=1, description="A in the ARMSE normalization; default bus count")
    sample_count: Optional[int] = Field(None, ge=1, description="N in the ARMSE normalization; default T")
    track_bus: Optional[int] = Field(None, description="bus id whose absolute errors are reported per step")


class OptimizerBlock(_Block):
    variant: Variant = Field(Variant.ISGA, description="SGA, ISGA, BAT or PSO")
    population: int = Field(30, ge=5, description="agents n")
    iterations: int = Field(500, ge=1, description="iterations M")
    f_min: float = Field(10.0, description="bat minimum frequency")
    f_max: float = Field(100.0, description="bat maximum frequency")
    sga_damping: SgaDamping = Field(SgaDamping.AS_PRINTED, description="velocity damping: as_printed or exp_ratio")
    sga_tail_term: TailTerm = Field(TailTerm.AS_PRINTED,
                                    description="tail cohort term: as_printed (X_n + X_i) or difference (X_n - X_i)")
    seed: int = Field(0, ge=0, description="optimizer seed")
    bounds: Dict[str, Tuple[float, float]] = Field(
        default_factory=dict, description=f"search box overrides keyed by {', '.join(PARAM_KEYS)}")

    @model_validator(mode='after')
    def _check(self) -> 'OptimizerBlock':
        if self.f_min > self.f_max:
            raise ValueError("f_min must not exceed f_max")
        unknown = set(self.bounds) - set(PARAM_KEYS)
        if unknown:
            raise ValueError(f"unknown tuning coordinate(s): {', '.join(sorted(unknown))}")
        for key, (lo, hi) in self.bounds.items():
            if lo > hi:
                raise ValueError(f"bounds of {key}: lower {lo} exceeds upper {hi}")
        return self


class TuningBlock(_Block):
    target: Literal['gmmeef_aukf', 'aukf'] = Field('gmmeef_aukf', description="filter kind to tune")
    filter: Optional[str] = Field(None, description="filter block whose parameters seed the search")
    fit_runs: int = Field(10, ge=1, description="Monte Carlo repeats per fitness evaluation")
    fit_horizon: int = Field(60, ge=1, description="steps per fitness evaluation")
    retune_every: Optional[int] = Field(None, ge=1, description="re-tune window in steps")
    seed: Optional[int] = Field(None, ge=0, description="seed of the tuning trajectories; default base_seed")


class OutputBlock(_Block):
    directory: str = Field("results", description="output directory")
    formats: List[Literal['csv', 'jsonl', 'xlsx']] = Field(default_factory=lambda: ['csv'],
                                                           description="report formats")


class RunConfig(_Block):
    """Complete run configuration; the defaults are the reference operating point."""
    schema_version: Literal[1] = Field(SCHEMA_VERSION, description="configuration schema version")
    network: NetworkBlock = Field(default_factory=NetworkBlock)
    scenario: ScenarioBlock = Field(default_factory=ScenarioBlock)
    initialization: InitializationBlock = Field(default_factory=InitializationBlock)
    filters: Dict[str, FilterBlock] = Field(default_factory=_default_filters, description="named filters")
    experiment: ExperimentBlock = Field(default_factory=ExperimentBlock)
    optimizer: OptimizerBlock = Field(default_factory=OptimizerBlock)
    tuning: TuningBlock = Field(default_factory=TuningBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode='after')
    def _check(self) -> 'RunConfig':
        if not self.filters:
            raise ValueError("at least one filter is required")
        if self.scenario.bad_data:
            for ev in self.scenario.bad_data:
                if ev.t > self.experiment.horizon:
                    raise ValueError(f"bad-data event at t={ev.t} lies outside 1..{self.experiment.horizon}")
        if self.tuning.filter is not None and self.tuning.filter not in self.filters:
            raise ValueError(f"tuning.filter {self.tuning.filter!r} is not a configured filter")
        return self


def _format_validation(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err['loc'])
        parts.append(f"{loc}: {err['msg']}" if loc else err['msg'])
    return "; ".join(parts)


def parse_config(data: Optional[Dict[str, Any]]) -> RunConfig:
    """Validate a configuration mapping (None gives the defaults)."""
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_format_validation(e)}") from e


def load_config(path: Optional[Union[str, Path]] = None) -> Tuple[RunConfig, Path]:
    """
    Load and validate a YAML run configuration.

    Args:
        path: Config file; None gives the defaults relative to the working directory

    Returns:
        (RunConfig, directory that relative paths resolve against)

    Raises:
        ConfigError: missing file, malformed YAML or invalid content
    """
    if path is None:
        return RunConfig(), Path.cwd()
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: malformed YAML: {e}") from e
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    cfg = parse_config(data)
    logger.info("loaded configuration %s (hash %s)", path, config_hash(cfg)[:12])
    return cfg, path.resolve().parent


def config_hash(cfg: RunConfig) -> str:
    """sha256 of the canonical JSON of the validated configuration."""
    canonical = json.dumps(cfg.model_dump(mode='json'), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode='json'), sort_keys=False, allow_unicode=True)


def config_key_reference() -> str:
    """One line per configuration key with its description and default."""
    lines: List[str] = []

    def walk(model: type, prefix: str) -> None:
        for name, info in model.model_fields.items():
            key = f"{prefix}{name}"
            annotation = info.annotation
            if isinstance(annotation, type) and issubclass(annotation, BaseModel):
                lines.append(f"  {key}")
                walk(annotation, key + ".")
                continue
            if info.is_required():
                default = "required"
            elif info.default_factory is not None:
                default = info.default_factory()
            else:
                default = info.default
            if isinstance(default, Enum):
                default = default.value
            if isinstance(default, dict) and default and all(isinstance(v, BaseModel) for v in default.values()):
                default = "{" + ", ".join(default) + "}"
            lines.append(f"  {key}: {info.description or ''} (default: {default!s})")
            if key == 'filters':
                walk(FilterBlock, "filters.<name>.")
            elif key == 'scenario.bad_data':
                walk(BadDataEventBlock, "scenario.bad_data[].")

    walk(RunConfig, "")
    return "\n".join(lines)


def resolve_path(p: Union[str, Path], base_dir: Path) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base_dir / p


def load_overlay(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a tuning overlay written by the tune command."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise ConfigError(f"overlay file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: malformed YAML: {e}") from e
    if not isinstance(data, dict) or not isinstance(data.get('params', {}), dict):
        raise ConfigError(f"{path}: overlay must be a mapping with a 'params' mapping")
    return data


def build_model(cfg: RunConfig, base_dir: Path) -> PowerSystemModel:
    """Load the case and resolve the meter plan."""
    net_cfg = cfg.network
    cache_dir = resolve_path(net_cfg.cache_dir, base_dir) if net_cfg.cache_dir else None
    loader = CaseLoader(cache_dir=cache_dir, cache_enabled=cache_dir is not None)
    net = loader.load(resolve_path(net_cfg.case, base_dir))
    if net_cfg.measurement_plan:
        plan = MeasurementPlan.build(net, net_cfg.measurement_plan)
    else:
        plan = MeasurementPlan.default(net)
    return PowerSystemModel(net, plan, level_coeff=net_cfg.level_coeff, trend_coeff=net_cfg.trend_coeff)


def build_scenario(cfg: RunConfig) -> Scenario:
    s = cfg.scenario
    bad = [(ev.t, ev.multiplier) for ev in s.bad_data] if s.bad_data is not None else None
    return scenario_preset(s.preset, q0=s.process_variance, r0=s.measurement_variance,
                           impulse_prob=s.impulse_prob, impulse_scale=s.impulse_scale,
                           impulse_fraction=s.impulse_fraction, bad_data=bad)


def build_estimators(cfg: RunConfig, base_dir: Path) -> Tuple[Dict[str, Any], Dict[str, list]]:
    """
    Instantiate the configured filters.

    Returns:
        (estimators by name, re-tune schedules by name)

    Raises:
        ConfigError: unknown or inconsistent parameters
    """
    from estimators import create_estimator

    estimators: Dict[str, Any] = {}
    schedules: Dict[str, list] = {}
    for name, block in cfg.filters.items():
        params = dict(block.params)
        overlay = None
        if block.overlay:
            overlay = load_overlay(resolve_path(block.overlay, base_dir))
            params.update(overlay.get('params', {}))
        try:
            estimator = create_estimator(block.kind, params)
        except KeyError as e:
            raise ConfigError(f"filters.{name}: {e.args[0]}") from e
        problems = estimator.validate_params()
        if problems:
            raise ConfigError(f"filters.{name}: {'; '.join(problems)}")
        estimators[name] = estimator

        if overlay and overlay.get('schedule'):
            vectors = [(int(item['start_step']), TuningVector.from_params(item['params']))
                       for item in overlay['schedule']]
            schedules[name] = schedule_configs(estimator, vectors, block.kind)
    return estimators, schedules


def build_experiment_spec(cfg: RunConfig, base_dir: Path, jobs: int = 1,
                          model: Optional[PowerSystemModel] = None) -> ExperimentSpec:
    """Resolve a RunConfig into the ExperimentSpec the harness runs."""
    model = model or build_model(cfg, base_dir)
    estimators, schedules = build_estimators(cfg, base_dir)
    exp = cfg.experiment
    if exp.track_bus is not None:
        try:
            model.net.bus_index(exp.track_bus)
        except KeyError:
            raise ConfigError(f"experiment.track_bus: bus {exp.track_bus} is not in the case") from None
    spec = ExperimentSpec(
        model=model,
        scenario=build_scenario(cfg),
        estimators=estimators,
        runs=exp.runs,
        horizon=exp.horizon,
        base_seed=exp.base_seed,
        initialization=build_initialization(cfg),
        rmse_convention=exp.rmse_convention,
        bus_count=exp.bus_count,
        sample_count=exp.sample_count,
        track_bus=exp.track_bus,
        magnitude_floor=cfg.network.magnitude_floor,
        schedules=schedules,
        jobs=jobs,
        provenance={'schema_version': cfg.schema_version, 'config_hash': config_hash(cfg)},
    )
    problems = spec.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return spec


def build_initialization(cfg: RunConfig) -> InitializationSpec:
    i = cfg.initialization
    return InitializationSpec(p0=i.p0, q0=i.q0, r0=i.r0, perturb_initial=i.perturb_initial)


def build_search_bounds(cfg: RunConfig) -> SearchBounds:
    return SearchBounds.from_mapping(dict(cfg.optimizer.bounds))


def build_optimizer_config(cfg: RunConfig, lower: Sequence[float], upper: Sequence[float],
                           jobs: int = 1) -> OptimizerConfig:
    o = cfg.optimizer
    return OptimizerConfig(lower=lower, upper=upper, population=o.population, max_iters=o.iterations,
                           variant=o.variant, f_min=o.f_min, f_max=o.f_max, seed=o.seed,
                           sga_damping=o.sga_damping, sga_tail_term=o.sga_tail_term, jobs=jobs)


def with_seed(cfg: RunConfig, seed: Optional[int]) -> RunConfig:
    """Copy of ``cfg`` with the experiment and optimizer seeds replaced."""
    if seed is None:
        return cfg
    return cfg.model_copy(update={
        'experiment': cfg.experiment.model_copy(update={'base_seed': seed}),
        'optimizer': cfg.optimizer.model_copy(update={'seed': seed}),
    })


__all__ = [
    'SCHEMA_VERSION',
    'RunConfig',
    'parse_config',
    'load_config',
    'config_hash',
    'config_key_reference',
    'build_model',
    'build_scenario',
    'build_estimators',
    'build_experiment_spec',
    'build_search_bounds',
    'build_optimizer_config',
    'with_seed',
]
