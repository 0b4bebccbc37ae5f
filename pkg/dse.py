# dse.py
"""
Power-system dynamic state estimation toolkit.

Subcommands: parse-case, estimate, tune, bench-opt, sweep.
Exit codes: 0 ok, 2 config or usage error, 3 case parse error, 4 runtime failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from core import __version__
from core.case_loader import CaseLoader
from core.config import (
    build_estimators,
    build_experiment_spec,
    build_initialization,
    build_model,
    build_optimizer_config,
    build_scenario,
    build_search_bounds,
    config_hash,
    config_key_reference,
    load_config,
    resolve_path,
    with_seed,
)
from core.errors import (
    BenchmarkError,
    CaseParseError,
    CaseValidationError,
    ConfigError,
    DseError,
    ExperimentAborted,
)
from core.harness import run_experiment
from core.isga import Variant
from core.metrics import improvement_pct, timing_ratio
from core.optimizer_bench import OptimizerBenchmark
from core.sensitivity import SensitivityAnalyzer
from core.tuning import FitnessBudget, tune_filter
from utils.report_generator import ReportGenerator

logger = logging.getLogger("dse")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4

FORMATS = ('csv', 'jsonl', 'xlsx')


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _variant_list(text: str) -> List[Variant]:
    try:
        return [Variant(x.strip().upper()) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected variants from {', '.join(v.value for v in Variant)}, got {text!r}") from None


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _progress(label: str) -> Callable[..., None]:
    """Progress callback logging roughly every tenth of the work."""
    state = {'last': -1}

    def callback(completed: int, total: int, *_) -> None:
        decile = (10 * completed) // max(total, 1)
        if decile != state['last']:
            state['last'] = decile
            logger.info("%s: %d/%d", label, completed, total)

    return callback


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML run configuration (default: built-in)")
    common.add_argument("--seed", type=int, default=None, help="override experiment and optimizer seeds")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    common.add_argument("--out", type=Path, default=None, help="output directory (default: output.directory)")
    common.add_argument("--format", dest="formats", action="append", choices=FORMATS, default=None,
                        help="output format, repeatable (default: output.formats)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(
        prog="dse",
        description="Robust dynamic state estimation of power networks and coefficient tuning.",
        epilog="configuration keys:\n" + config_key_reference(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-case", parents=[common], help="parse a case file and print its summary")
    p.add_argument("path", type=Path, help="IEEE common-format case file")
    p.add_argument("--json-out", type=Path, default=None, help="write the JSON dump here instead of stdout")

    sub.add_parser("estimate", parents=[common], help="run the Monte Carlo filter comparison")

    p = sub.add_parser("tune", parents=[common], help="tune filter coefficients with a population optimizer")
    p.add_argument("--target", choices=("gmmeef_aukf", "aukf"), default=None,
                   help="filter kind to tune (default: tuning.target)")
    p.add_argument("--variant", type=str.upper, choices=[v.value for v in Variant], default=None,
                   help="optimizer variant (default: optimizer.variant)")
    p.add_argument("--iterations", type=int, default=None, help="optimizer iterations")
    p.add_argument("--population", type=int, default=None, help="optimizer population")

    p = sub.add_parser("bench-opt", parents=[common], help="compare optimizers on the benchmark suite")
    p.add_argument("--functions", type=_int_list, default=[1, 12], help="comma-separated ids 1..23")
    p.add_argument("--variants", type=_variant_list, default=list(Variant), help="comma-separated variants")
    p.add_argument("--seeds", type=int, default=10, help="runs per function and variant")
    p.add_argument("--dim", type=int, default=30, help="dimension of the scalable functions")
    p.add_argument("--iterations", type=int, default=None, help="optimizer iterations")
    p.add_argument("--population", type=int, default=None, help="optimizer population")

    p = sub.add_parser("sweep", parents=[common], help="vary one coefficient of one filter")
    p.add_argument("--filter", dest="filter_name", required=True, help="filter name from the config")
    p.add_argument("--param", required=True, help="estimator parameter")
    p.add_argument("--values", type=_float_list, required=True, help="comma-separated values")

    args = parser.parse_args(argv)
    if args.command == "bench-opt":
        if not args.functions:
            parser.error("bench-opt needs at least one function id")
        if not args.variants:
            parser.error("bench-opt needs at least one variant")
        if args.seeds < 1:
            parser.error("--seeds must be at least 1")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    return args


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _provenance(cfg, seed: int) -> dict:
    return {'schema_version': cfg.schema_version, 'config_hash': config_hash(cfg),
            'seed': seed, 'version': __version__}


def _out_dir(args, cfg, base_dir: Path, sub: str) -> Path:
    if args.out is not None:
        return args.out
    return resolve_path(cfg.output.directory, base_dir) / sub


def cmd_parse_case(args) -> int:
    network = CaseLoader(cache_enabled=False).load(args.path)
    print(network.summary())
    dump = network.to_json()
    if args.json_out is not None:
        args.json_out.parent.mkdir(parents=True, exist_ok=True)
        args.json_out.write_text(dump, encoding='utf-8')
        logger.info("wrote %s", args.json_out)
    else:
        print(dump)
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg, base_dir = load_config(args.config)
    cfg = with_seed(cfg, args.seed)
    spec = build_experiment_spec(cfg, base_dir, jobs=args.jobs)
    formats = args.formats or cfg.output.formats
    out_dir = _out_dir(args, cfg, base_dir, "estimate")
    provenance = _provenance(cfg, cfg.experiment.base_seed)
    try:
        report = run_experiment(spec, progress_callback=_progress("experiments"))
    except ExperimentAborted as e:
        ReportGenerator.emit_report(e.report, out_dir, formats, {**provenance, "aborted": True})
        logger.error("%s; partial report of %d experiments written to %s", e, e.report.runs, out_dir)
        return EXIT_RUNTIME

    ReportGenerator.emit_report(report, out_dir, formats, provenance)

    summary = report.summary_frame()
    print(summary.to_string(index=False))
    baseline = next((s for s in report.filters.values() if spec.estimators[s.name].short_name == 'UKF'), None)
    if baseline is not None:
        for s in report.filters.values():
            if s is baseline:
                continue
            print(f"{s.name}: {improvement_pct(baseline.metrics.armse_v, s.metrics.armse_v):+.1f}% ARMSE(V), "
                  f"{improvement_pct(baseline.metrics.armse_phi, s.metrics.armse_phi):+.1f}% ARMSE(phase), "
                  f"{timing_ratio(s.mean_step_ms, baseline.mean_step_ms):.2f}x step time vs {baseline.name}")
    failed = sum(s.failed_runs for s in report.filters.values())
    if failed:
        logger.warning("%d filter runs stopped early; see run.json", failed)
    return EXIT_OK


def cmd_tune(args) -> int:
    from estimators import create_estimator

    cfg, base_dir = load_config(args.config)
    cfg = with_seed(cfg, args.seed)
    updates = {}
    if args.variant is not None:
        updates['variant'] = Variant(args.variant)
    if args.iterations is not None:
        updates['iterations'] = args.iterations
    if args.population is not None:
        updates['population'] = args.population
    if updates:
        cfg = cfg.model_copy(update={'optimizer': cfg.optimizer.model_copy(update=updates)})
    target = args.target or cfg.tuning.target

    model = build_model(cfg, base_dir)
    if cfg.tuning.filter is not None:
        estimators, _ = build_estimators(cfg, base_dir)
        estimator = estimators[cfg.tuning.filter]
    else:
        estimator = create_estimator(target)

    bounds = build_search_bounds(cfg)
    try:
        opt_cfg = build_optimizer_config(cfg, bounds.lower, bounds.upper, jobs=args.jobs)
    except ValueError as e:
        raise ConfigError(f"optimizer: {e}") from e
    seed = cfg.tuning.seed if cfg.tuning.seed is not None else cfg.experiment.base_seed
    result = tune_filter(
        model, build_scenario(cfg), estimator, opt_cfg,
        budget=FitnessBudget(runs=cfg.tuning.fit_runs, horizon=cfg.tuning.fit_horizon),
        base_seed=seed,
        initialization=build_initialization(cfg),
        target=target,
        retune_every=cfg.tuning.retune_every,
        rmse_convention=cfg.experiment.rmse_convention,
        progress_callback=_progress("iterations"),
    )

    formats = args.formats or cfg.output.formats
    out_dir = _out_dir(args, cfg, base_dir, "tune")
    ReportGenerator.emit_tuning(result, out_dir, formats, _provenance(cfg, seed))
    print(f"best fitness {result.fitness:.6g}")
    for key, value in result.vector.to_params(target).items():
        print(f"  {key}: {value:.6g}")
    return EXIT_OK


def cmd_bench_opt(args) -> int:
    cfg, base_dir = load_config(args.config)
    cfg = with_seed(cfg, args.seed)
    o = cfg.optimizer
    bench = OptimizerBenchmark(dim=args.dim, population=args.population or o.population,
                               max_iters=args.iterations or o.iterations, f_min=o.f_min, f_max=o.f_max,
                               sga_damping=o.sga_damping, sga_tail_term=o.sga_tail_term)
    seeds = list(range(o.seed, o.seed + args.seeds))
    result = bench.compare(args.functions, args.variants, seeds, num_workers=args.jobs,
                           progress_callback=_progress("runs"))

    formats = args.formats or cfg.output.formats
    out_dir = _out_dir(args, cfg, base_dir, "bench-opt")
    ReportGenerator.emit_benchmark(result, out_dir, formats, _provenance(cfg, o.seed))
    print(result.medians[['function', 'name', 'variant', 'median', 'best', 'worst']].to_string(index=False))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, base_dir = load_config(args.config)
    cfg = with_seed(cfg, args.seed)
    spec = build_experiment_spec(cfg, base_dir, jobs=args.jobs)
    try:
        table = SensitivityAnalyzer(spec).single_param_sweep(args.filter_name, args.param, args.values,
                                                              progress_callback=_progress("values"))
    except KeyError as e:
        raise ConfigError(e.args[0]) from e

    formats = args.formats or cfg.output.formats
    out_dir = _out_dir(args, cfg, base_dir, "sweep")
    ReportGenerator.write_table(table, out_dir, "sweep", formats,
                                 _provenance(cfg, cfg.experiment.base_seed))
    print(table.to_string(index=False))
    return EXIT_OK


COMMANDS = {
    'parse-case': cmd_parse_case,
    'estimate': cmd_estimate,
    'tune': cmd_tune,
    'bench-opt': cmd_bench_opt,
    'sweep': cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    _setup_logging(args)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, BenchmarkError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (CaseParseError, CaseValidationError) as e:
        logger.error("%s", e)
        return EXIT_PARSE
    except DseError as e:
        logger.error("%s", e)
        return EXIT_RUNTIME
    except Exception:
        logger.exception("run failed")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
