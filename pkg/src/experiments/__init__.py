"""
Experiment layer on top of the bandit package: bound formulas, trace
invariants, the run/sweep harness and the validation suites.
"""

from .harness import (
    ExperimentConfig,
    LowerBoundReport,
    RegretReport,
    ScalingResult,
    empirical_quantile,
    fit_scaling_exponent,
    run_experiment,
    run_grid,
    run_lowerbound,
    run_once,
    scaling_study,
    sweep_epsilon,
)

__all__ = [
    'ExperimentConfig',
    'LowerBoundReport',
    'RegretReport',
    'ScalingResult',
    'empirical_quantile',
    'fit_scaling_exponent',
    'run_experiment',
    'run_grid',
    'run_lowerbound',
    'run_once',
    'scaling_study',
    'sweep_epsilon',
]
