"""
Command-line entry point for the bandit experiment runner.

Subcommands: validate, run, sweep, lowerbound, bounds, scaling.
Exit codes: 0 success, 1 usage or configuration error, 2 runtime error,
3 validation or trace-check failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

# Add src to path for imports
project_root = Path(__file__).parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))
app_path = Path(__file__).parent
if str(app_path) not in sys.path:
    sys.path.insert(0, str(app_path))

from bandit.errors import BanditError, ConfigError  # noqa: E402
from experiments.bounds import theorem1_bound, theorem2_bound, theorem2_constant  # noqa: E402
from experiments.harness import (  # noqa: E402
    ExperimentConfig,
    RegretReport,
    empirical_quantile,
    run_experiment,
    run_lowerbound,
    scaling_study,
    sweep_table,
)
from experiments.validation import failing_checks, run_validation  # noqa: E402
from services import ConfigService, ResultsService  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VALIDATION = 3

# argparse dest -> ExperimentConfig field
FLAG_FIELDS = {
    'seed': 'seed',
    'algorithms': 'algorithms',
    'epsilon': 'epsilons',
    'reps': 'repetitions',
    'nu_mode': 'nu_mode',
    'workers': 'workers',
    'gamma': 'gamma',
}


class CliArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage errors as ConfigError instead of exiting"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> CliArgumentParser:
    common = CliArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument('--config', type=Path, help="flat key = value config file")
    common.add_argument('--preset', help="parameter preset (theorem or section7)")
    common.add_argument('--seed', help="base seed (unsigned 64-bit)")
    common.add_argument('--out', type=Path, default=Path('results'), help="output directory")
    common.add_argument('--algorithms', help="comma-separated learners: lifted, classic, increasing_lr")
    common.add_argument('--epsilon', help="comma-separated perturbation levels")
    common.add_argument('--reps', help="repetitions per (algorithm, epsilon)")
    common.add_argument('--nu-mode', dest='nu_mode', help="nu used in eta and the bounds: effective or literal")
    common.add_argument('--workers', help="parallel processes for repetitions")
    common.add_argument('--gamma', help="confidence parameter of the high-probability bound")
    common.add_argument('--verbose', '-v', action='store_true', help="debug logging")

    parser = CliArgumentParser(prog='bandit-sim', description=__doc__.splitlines()[1], allow_abbrev=False)
    sub = parser.add_subparsers(dest='command', required=True)

    validate = sub.add_parser('validate', parents=[common], allow_abbrev=False,
                              help="barrier identity and sampler property suites")
    validate.add_argument('--trials', type=int, default=100, help="random cone points")
    validate.add_argument('--draws', type=int, default=100_000, help="sampler draws")
    validate.add_argument('--scale', type=float, default=400.0, help="barrier scale c under test")
    validate.set_defaults(handler=cmd_validate)

    run = sub.add_parser('run', parents=[common], allow_abbrev=False,
                         help="run every (algorithm, epsilon) cell and write trace.csv, summary.csv")
    run.add_argument('--quantile', type=float, help="report this quantile of the linearized regret")
    run.set_defaults(handler=cmd_run)

    sweep = sub.add_parser('sweep', parents=[common], allow_abbrev=False,
                           help="epsilon sweep: sweep.csv and sweep.svg")
    sweep.set_defaults(handler=cmd_sweep)

    lowerbound = sub.add_parser('lowerbound', parents=[common], allow_abbrev=False,
                                help="play against the spike oracle")
    lowerbound.set_defaults(handler=cmd_lowerbound)

    bounds = sub.add_parser('bounds', parents=[common], allow_abbrev=False,
                            help="print the default parameters and the bound values")
    bounds.set_defaults(handler=cmd_bounds)

    scaling = sub.add_parser('scaling', parents=[common], allow_abbrev=False,
                             help="regret at several horizons and the fitted exponent")
    scaling.set_defaults(handler=cmd_scaling)
    return parser


def resolve_config(args: argparse.Namespace, extra: List[str], config_service: ConfigService) -> ExperimentConfig:
    overrides: Dict[str, str] = {}
    for dest, key in FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    overrides.update(config_service.parse_overrides(extra))
    return config_service.build_config(preset=args.preset, config_file=args.config, overrides=overrides)


def _report_checks(results: Dict[tuple, List[RegretReport]]) -> int:
    failed = [(r, name) for reports in results.values() for r in reports for name in r.failing_checks()]
    if not failed:
        print("✅ All trace checks passed")
        return EXIT_OK
    for report, name in failed:
        result = report.invariants[name]
        print(f"❌ {name} failed for {report.algorithm} eps={report.epsilon:g} rep={report.repetition}: "
              f"residual {result.residual:.3e} > {result.tolerance:.0e} ({result.detail})")
    return EXIT_VALIDATION


def cmd_validate(args, extra, config_service) -> int:
    if extra:
        config_service.parse_overrides(extra)
    seed = config_service.coerce({'seed': args.seed})['seed'] if args.seed is not None else 0
    table = run_validation(seed=seed, trials=args.trials, draws=args.draws, scale=args.scale)
    print(table.to_string(index=False, float_format=lambda x: f"{x:.3e}"))
    failed = failing_checks(table)
    if failed:
        print(f"❌ Validation failed: {', '.join(failed)}")
        return EXIT_VALIDATION
    print("✅ All validation checks passed")
    return EXIT_OK


def cmd_run(args, extra, config_service) -> int:
    config = resolve_config(args, extra, config_service)
    results = run_experiment(config)
    ResultsService(args.out).write_run(results)

    summary = ResultsService.summary_frame(results)
    print(summary.to_string(index=False))
    if args.quantile is not None:
        for (algorithm, epsilon), reports in results.items():
            q = empirical_quantile(reports, args.quantile)
            bound = reports[0].bounds['thm2']
            print(f"📈 {algorithm} eps={epsilon:g}: {args.quantile:g}-quantile of linearized regret {q:.6g} "
                  f"vs high-probability bound {bound:.6g} (gamma={config.gamma:g})")
    return _report_checks(results)


def cmd_sweep(args, extra, config_service) -> int:
    config = resolve_config(args, extra, config_service)
    results = run_experiment(config)
    table = sweep_table(results)
    ResultsService(args.out).write_sweep(table)
    print(table.to_string(index=False))
    return _report_checks(results)


def cmd_lowerbound(args, extra, config_service) -> int:
    config = resolve_config(args, extra, config_service)
    for algorithm in config.algorithms:
        for epsilon in config.epsilons:
            report = run_lowerbound(algorithm, epsilon, config.T, config)
            print(f"🎯 {algorithm} eps={report.epsilon:g} T={report.horizon}")
            print(f"   loss sum:         {report.loss_sum}")
            print(f"   deferred optimum: {report.deferred_optimum}")
            print(f"   regret:           {report.regret}")
            print(f"   black-box gap:    {report.gap}")
            print(f"   gap bounds:       {report.gap_lower_bound} <= gap <= {report.gap_upper_bound:.6g}")
    return EXIT_OK


def cmd_bounds(args, extra, config_service) -> int:
    config = resolve_config(args, extra, config_service)
    nu = config.nu
    print(f"d={config.d} T={config.T} G={config.G:g} D={config.D:g} nu={nu:g} ({config.nu_mode}) "
          f"gamma={config.gamma:g}")
    try:
        C = theorem2_constant(config.T, config.G, config.D)
        print(f"C = {C}")
    except BanditError as e:
        C = None
        print(f"C unavailable: {e}")
    for epsilon in config.epsilons:
        params = config.learner_params(epsilon)
        thm1 = theorem1_bound(config.d, config.T, nu, params.delta, epsilon, config.G, config.D)
        line = f"eps={epsilon:g}: delta={params.delta:.12g} eta={params.eta:.12g} thm1={thm1:.12g}"
        if C is not None:
            thm2 = theorem2_bound(config.d, config.T, nu, params.delta, epsilon, config.G, config.D, config.gamma)
            line += f" thm2={thm2:.12g}"
        print(line)
    return EXIT_OK


def cmd_scaling(args, extra, config_service) -> int:
    config = resolve_config(args, extra, config_service)
    result = scaling_study(config)
    ResultsService(args.out).write_scaling(result)
    print(result.to_frame().to_string(index=False))
    print(f"📈 fitted exponent: {result.exponent:.6g}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map errors to exit codes"""
    argv = sys.argv[1:] if argv is None else argv
    verbose = '--verbose' in argv or '-v' in argv
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
    )
    try:
        args, extra = build_parser().parse_known_args(argv)
        config_service = ConfigService(project_root)
        return args.handler(args, extra, config_service)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BanditError as e:
        logger.error(f"❌ Runtime error: {e}")
        print(f"❌ Runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        print(f"❌ I/O error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
