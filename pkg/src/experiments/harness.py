"""
Experiment harness: single seeded runs, repetitions, epsilon sweeps,
horizon scaling and the lower-bound game against the spike oracle.

Every run is a pure function of (config, algorithm, epsilon, seed). Each run
splits its seed into independent streams for the adversary, the learner and
the invariant checks, so repetitions can execute in any order or in parallel.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from bandit.adversary import PerturbationKind, SpikeOracle, gen_oblivious, loss, make_rule, spike_gap, spike_query
from bandit.algorithms import ALGORITHMS, BanditLearner, LearnerParams, RoundRecord, default_params, make_learner, recommend
from bandit.errors import BanditError, ConfigError, InvalidArgumentError, RoundError
from bandit.geometry import linear_optimum
from bandit.sampling import MAX_SEED, spawn_streams

from .bounds import blackbox_bound, blackbox_lower_bound, lemma8_bound, theorem1_bound, theorem2_bound
from .invariants import InvariantResult, check_trace

logger = logging.getLogger(__name__)

EPSILON_CLAMP = 1.0 - 1e-9
PRESET_NAMES = ('theorem', 'section7')
NU_MODES = ('effective', 'literal')
MC_CHUNK = 100_000


def clamp_epsilon(epsilon: float) -> float:
    """epsilon = 1 is replaced by 1 - 1e-9; anything else outside [0, 1) is rejected"""
    epsilon = float(epsilon)
    if epsilon == 1.0:
        logger.warning(f"⚠️ epsilon = 1 is outside [0, 1); clamping to {EPSILON_CLAMP!r}")
        return EPSILON_CLAMP
    if not 0.0 <= epsilon < 1.0:
        raise ConfigError(f"epsilon must lie in [0, 1), got {epsilon}", key='epsilons')
    return epsilon


@dataclass
class ExperimentConfig:
    """
    Full description of an experiment.

    `preset` selects the learning-rate formula ('theorem' or 'section7');
    `nu_mode` selects the nu plugged into eta and into the bound formulas:
    'effective' uses the cone barrier's 2 c k, 'literal' uses inner_nu.
    `eta` and `delta` override the preset's choice when set.
    """
    d: int = 5
    T: int = 2000
    D: float = 5.0
    G: float = 1.0
    epsilons: List[float] = field(default_factory=lambda: [0.0])
    algorithms: List[str] = field(default_factory=lambda: ['lifted'])
    repetitions: int = 10
    seed: int = 0
    perturbation: str = 'zero'
    preset: str = 'theorem'
    nu_mode: str = 'effective'
    scale: float = 400.0
    inner_nu: float = 1.0
    kappa: Optional[float] = None
    rho: Optional[float] = None
    gamma: float = 0.1
    horizons: List[int] = field(default_factory=lambda: [500, 2000, 8000])
    workers: int = 1
    eta: Optional[float] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}", key='d')
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}", key='T')
        if self.D < 1:
            raise ConfigError(f"D must be >= 1, got {self.D}", key='D')
        if self.G < 0:
            raise ConfigError(f"G must be >= 0, got {self.G}", key='G')
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}", key='repetitions')
        if not 0 <= self.seed <= MAX_SEED - (self.repetitions - 1):
            raise ConfigError(
                f"seed {self.seed} with {self.repetitions} repetitions leaves the unsigned 64-bit range "
                f"(repetition r uses seed + r)", key='seed',
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", key='workers')
        if not self.epsilons:
            raise ConfigError("at least one epsilon is required", key='epsilons')
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required", key='algorithms')
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithm(s) {unknown}; expected some of {sorted(ALGORITHMS)}",
                              key='algorithms')
        if self.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset '{self.preset}' (expected one of {PRESET_NAMES})", key='preset')
        if self.nu_mode not in NU_MODES:
            raise ConfigError(f"unknown nu_mode '{self.nu_mode}' (expected one of {NU_MODES})", key='nu_mode')
        try:
            PerturbationKind(self.perturbation)
        except ValueError:
            raise ConfigError(
                f"unknown perturbation '{self.perturbation}' "
                f"(expected one of {[k.value for k in PerturbationKind]})", key='perturbation'
            )
        if not self.scale > 0:
            raise ConfigError(f"scale must be positive, got {self.scale}", key='scale')
        if not self.inner_nu >= 1:
            raise ConfigError(f"inner_nu must be >= 1, got {self.inner_nu}", key='inner_nu')
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}", key='gamma')
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}", key='delta')
        if self.eta is not None and not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}", key='eta')
        self.epsilons = [clamp_epsilon(e) for e in self.epsilons]

    @property
    def nu(self) -> float:
        if self.nu_mode == 'literal':
            return float(self.inner_nu)
        return 2.0 * self.scale * self.inner_nu

    def learner_params(self, epsilon: float) -> LearnerParams:
        """Default (eta, delta) for this epsilon, then any explicit overrides"""
        params = default_params(epsilon, self.T, self.d, self.nu, G=self.G, D=self.D,
                                variant=self.preset, scale=self.scale, inner_nu=self.inner_nu)
        overrides = {}
        if self.eta is not None:
            overrides['eta'] = float(self.eta)
        if self.delta is not None:
            overrides['delta'] = float(self.delta)
        return replace(params, **overrides) if overrides else params

    def bounds(self, epsilon: float, params: LearnerParams) -> Dict[str, float]:
        """Theorem and lemma bound values at these parameters; nan where a formula degenerates"""
        nu, delta = self.nu, params.delta
        values = {
            'thm1': theorem1_bound(self.d, self.T, nu, delta, epsilon, self.G, self.D),
            'lemma8': lemma8_bound(params.eta, self.d, self.T, nu, delta, epsilon, self.G, self.D),
        }
        try:
            values['thm2'] = theorem2_bound(self.d, self.T, nu, delta, epsilon, self.G, self.D, self.gamma)
        except InvalidArgumentError as e:
            logger.debug(f"high-probability bound unavailable: {e}")
            values['thm2'] = math.nan
        return values


@dataclass
class RegretReport:
    """Outcome of one seeded run of one learner"""
    algorithm: str
    epsilon: float
    seed: int
    repetition: int
    losses: np.ndarray
    cum_loss: np.ndarray
    lin_regret_trace: np.ndarray
    step_norms: np.ndarray
    dual_norms: np.ndarray
    linearized_regret: float
    deviation_term: float
    iterate_term: float
    max_abs_f: float
    eta: float
    delta: float
    bounds: Dict[str, float]
    invariants: Dict[str, InvariantResult]
    recommended: np.ndarray
    normalization_violations: int = 0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def horizon(self) -> int:
        return int(self.losses.shape[0])

    @property
    def final_cum_loss(self) -> float:
        return float(self.cum_loss[-1]) if self.horizon else 0.0

    @property
    def bracket(self) -> Tuple[float, float]:
        """True regret lies in [linearized - 2 eps T, linearized + 2 eps T]"""
        width = 2.0 * self.epsilon * self.horizon
        return self.linearized_regret - width, self.linearized_regret + width

    @property
    def checks_passed(self) -> bool:
        return all(r.passed for r in self.invariants.values())

    def failing_checks(self) -> Dict[str, InvariantResult]:
        return {name: r for name, r in self.invariants.items() if not r.passed}


def _play(learner: BanditLearner, horizon: int, rng: np.random.Generator, observe) -> List[RoundRecord]:
    """act -> observe -> update for `horizon` rounds, attaching the round index to learner errors"""
    records = []
    for t in range(1, horizon + 1):
        try:
            y = learner.act(rng)
            records.append(learner.update(observe(t, y)))
        except RoundError:
            raise
        except BanditError as e:
            raise RoundError(t, e) from e
    return records


def run_once(config: ExperimentConfig, algorithm: str, epsilon: float, seed: int,
             repetition: int = 0) -> RegretReport:
    """
    Play one learner against one seeded oblivious adversary.

    Args:
        config: experiment description
        algorithm: key of ALGORITHMS
        epsilon: perturbation level in [0, 1) (1 is clamped)
        seed: unsigned 64-bit seed for this run
        repetition: index recorded in the report

    Returns:
        RegretReport with traces, regret decomposition, bounds and invariant residuals

    Raises:
        RoundError: a learner operation failed; the round index is attached
    """
    started = time.perf_counter()
    epsilon = clamp_epsilon(epsilon)
    adversary_rng, learner_rng, check_rng = spawn_streams(seed, 3)

    params = config.learner_params(epsilon)
    learner = make_learner(algorithm, params, kappa=config.kappa, rho=config.rho)
    K = learner.action_set
    sequence = gen_oblivious(config.T, config.d, config.G, adversary_rng)
    rule = make_rule(config.perturbation, epsilon, K, adversary_rng)

    records = _play(learner, config.T, learner_rng,
                    lambda t, y: loss(sequence, rule, t, y))

    theta = sequence.theta
    d = config.d
    losses = np.array([r.loss for r in records])
    points = np.array([r.point for r in records])
    iterates = np.array([r.iterate[:d] for r in records])
    x_star = linear_optimum(sequence.cumulative(), K)

    linear_played = np.einsum('ij,ij->i', theta, points)
    linear_iterate = np.einsum('ij,ij->i', theta, iterates)
    linear_star = theta @ x_star
    lin_regret_trace = np.cumsum(linear_played - linear_star)

    deviation = math.fsum(linear_played - linear_iterate)
    iterate_term = math.fsum(linear_iterate) - math.fsum(linear_star)
    linearized = math.fsum(linear_played) - math.fsum(linear_star)

    max_abs_f = float(np.abs(losses).max()) if losses.size else 0.0
    if max_abs_f > 1.0:
        logger.warning(f"⚠️ realized max |f_t(y_t)| = {max_abs_f:.4g} exceeds 1 ({algorithm}, eps={epsilon:g})")

    comparator = learner.barrier.embed((1.0 - params.delta) * x_star)
    invariants = check_trace(learner, records, comparator, check_rng)
    for name, result in invariants.items():
        if result.applicable and not result.passed:
            logger.warning(f"⚠️ {name} residual {result.residual:.3e} above {result.tolerance:.0e} "
                           f"({algorithm}, eps={epsilon:g}, seed={seed})")

    wall_time = time.perf_counter() - started
    logger.info(f"✅ {algorithm} eps={epsilon:g} seed={seed}: cum loss {losses.sum():.4f}, "
                f"lin regret {linearized:.4f} in {wall_time:.2f}s")
    return RegretReport(
        algorithm=algorithm,
        epsilon=epsilon,
        seed=seed,
        repetition=repetition,
        losses=losses,
        cum_loss=np.cumsum(losses),
        lin_regret_trace=lin_regret_trace,
        step_norms=np.array([r.step_norm for r in records]),
        dual_norms=np.array([r.estimator_dual_norm for r in records]),
        linearized_regret=linearized,
        deviation_term=deviation,
        iterate_term=iterate_term,
        max_abs_f=max_abs_f,
        eta=params.eta,
        delta=params.delta,
        bounds=config.bounds(epsilon, params),
        invariants=invariants,
        recommended=recommend(records),
        normalization_violations=learner.normalization_violations,
        wall_time=wall_time,
    )


def _run_cell(args) -> RegretReport:
    config, algorithm, epsilon, seed, repetition = args
    return run_once(config, algorithm, epsilon, seed, repetition)


def run_grid(config: ExperimentConfig, algorithm: str, epsilon: float) -> List[RegretReport]:
    """`repetitions` runs with seeds base, base + 1, ...; results in repetition order"""
    cells = [(config, algorithm, epsilon, config.seed + r, r) for r in range(config.repetitions)]
    if config.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(cell) for cell in cells]


def run_experiment(config: ExperimentConfig) -> Dict[Tuple[str, float], List[RegretReport]]:
    """Every (algorithm, epsilon) cell of the config, keyed in config order"""
    results = {}
    for algorithm in config.algorithms:
        for epsilon in config.epsilons:
            logger.info(f"🔄 Running {algorithm} at eps={epsilon:g} ({config.repetitions} repetitions)")
            results[(algorithm, epsilon)] = run_grid(config, algorithm, epsilon)
    return results


def _sample_std(values: Sequence[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def sweep_table(results: Dict[Tuple[str, float], List[RegretReport]]) -> pd.DataFrame:
    rows = []
    for (algorithm, epsilon), reports in results.items():
        finals = [r.final_cum_loss for r in reports]
        rows.append({
            'algorithm': algorithm,
            'epsilon': epsilon,
            'mean_cum_loss': float(np.mean(finals)),
            'std_cum_loss': _sample_std(finals),
            'mean_lin_regret': float(np.mean([r.linearized_regret for r in reports])),
        })
    return pd.DataFrame(rows, columns=['algorithm', 'epsilon', 'mean_cum_loss', 'std_cum_loss', 'mean_lin_regret'])


def sweep_epsilon(config: ExperimentConfig) -> pd.DataFrame:
    """Mean and sample std of the final cumulative loss per (algorithm, epsilon)"""
    return sweep_table(run_experiment(config))


def fit_scaling_exponent(horizons: Sequence[float], mean_regrets: Sequence[float]) -> float:
    """Least-squares slope of log(regret) against log(T)"""
    horizons = np.asarray(horizons, dtype=float)
    regrets = np.asarray(mean_regrets, dtype=float)
    if horizons.shape != regrets.shape:
        raise InvalidArgumentError(f"got {horizons.size} horizons but {regrets.size} regrets")
    if horizons.size < 3:
        raise InvalidArgumentError(f"at least 3 horizons are needed, got {horizons.size}")
    if np.any(regrets <= 0) or np.any(horizons <= 0):
        raise InvalidArgumentError("horizons and regrets must be positive to take logarithms")
    slope, _ = np.polyfit(np.log(horizons), np.log(regrets), 1)
    return float(slope)


def empirical_quantile(reports: Sequence[Union[RegretReport, float]], q: float) -> float:
    """Nearest-rank q-quantile of the final linearized regrets"""
    if not reports:
        raise InvalidArgumentError("empirical_quantile() needs at least one report")
    if not 0.0 < q < 1.0:
        raise InvalidArgumentError(f"q must lie in (0, 1), got {q}")
    values = sorted(r.linearized_regret if isinstance(r, RegretReport) else float(r) for r in reports)
    rank = max(math.ceil(q * len(values)) - 1, 0)
    return values[rank]


@dataclass
class ScalingResult:
    horizons: List[int]
    mean_regrets: List[float]
    bounds: List[float]
    exponent: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'horizon': self.horizons,
            'mean_lin_regret': self.mean_regrets,
            'bound_thm1': self.bounds,
        })


def scaling_study(config: ExperimentConfig, horizons: Optional[Sequence[int]] = None,
                  algorithm: Optional[str] = None, epsilon: Optional[float] = None) -> ScalingResult:
    """
    Mean linearized regret at several horizons and the fitted log-log exponent.

    The exponent is nan when fewer than 3 horizons are given or a mean regret
    is not positive.
    """
    horizons = list(horizons if horizons is not None else config.horizons)
    algorithm = algorithm or config.algorithms[0]
    epsilon = config.epsilons[0] if epsilon is None else epsilon
    means, bounds = [], []
    for T in horizons:
        cell = replace(config, T=int(T))
        reports = run_grid(cell, algorithm, epsilon)
        means.append(float(np.mean([r.linearized_regret for r in reports])))
        bounds.append(reports[0].bounds['thm1'])
        logger.info(f"📈 T={T}: mean lin regret {means[-1]:.4f} vs theorem bound {bounds[-1]:.4g}")
    try:
        exponent = fit_scaling_exponent(horizons, means)
    except InvalidArgumentError as e:
        logger.warning(f"⚠️ scaling exponent not fitted: {e}")
        exponent = math.nan
    return ScalingResult(horizons, means, bounds, exponent)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: np.ndarray
    std_error: np.ndarray
    expected: np.ndarray
    draws: int

    @property
    def z_scores(self) -> np.ndarray:
        err = np.where(self.std_error > 0, self.std_error, np.inf)
        return (self.mean - self.expected) / err

    def within(self, n_std: float = 4.0) -> bool:
        return bool(np.all(np.abs(self.z_scores) <= n_std))


def _mc_moments(sample_chunk, n: int, chunk: int) -> Tuple[np.ndarray, np.ndarray]:
    total = None
    total_sq = None
    remaining = n
    while remaining > 0:
        m = min(chunk, remaining)
        values = sample_chunk(m)
        total = values.sum(axis=0) if total is None else total + values.sum(axis=0)
        sq = (values * values).sum(axis=0)
        total_sq = sq if total_sq is None else total_sq + sq
        remaining -= m
    mean = total / n
    var = np.maximum(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, np.sqrt(var / n)


def estimator_monte_carlo(learner: BanditLearner, theta: np.ndarray, n: int,
                          rng: np.random.Generator, chunk: int = MC_CHUNK) -> MonteCarloEstimate:
    """
    Average of g = d f(y) A^{-1} mu over n draws at the learner's current
    iterate with the exactly linear loss f(y) = theta . y.

    The first d coordinates of the mean estimate theta.
    """
    d = learner.action_set.dimension
    theta = learner.action_set.check_dimension(np.asarray(theta, dtype=float), 'theta')
    iterate = learner.state.iterate
    root = learner.barrier.hessian_root(iterate)
    A = root.inv_sqrt
    V, w = root.eigenvectors, root.eigenvalues
    sqrt_h = (V * np.sqrt(w)) @ V.T

    def draw(m: int) -> np.ndarray:
        mus = learner.sample_directions(root, m, rng)
        played = iterate + mus @ A
        f = played[:, :d] @ theta
        return (d * f)[:, None] * (mus @ sqrt_h)[:, :d]

    mean, se = _mc_moments(draw, n, chunk)
    return MonteCarloEstimate(mean, se, theta.copy(), n)


def displacement_monte_carlo(learner: BanditLearner, n: int, rng: np.random.Generator,
                             chunk: int = MC_CHUNK) -> MonteCarloEstimate:
    """Average Dikin displacement A mu over n draws; zero in expectation"""
    root = learner.barrier.hessian_root(learner.state.iterate)
    A = root.inv_sqrt
    mean, se = _mc_moments(lambda m: learner.sample_directions(root, m, rng) @ A, n, chunk)
    return MonteCarloEstimate(mean, se, np.zeros_like(mean), n)


@dataclass
class LowerBoundReport:
    algorithm: str
    epsilon: float
    horizon: int
    loss_sum: float
    deferred_optimum: float
    regret: float
    gap: float
    gap_lower_bound: float
    gap_upper_bound: float
    recommended: np.ndarray
    queries: int


def run_lowerbound(algorithm: str, epsilon: float, horizon: int,
                   config: Optional[ExperimentConfig] = None, seed: Optional[int] = None) -> LowerBoundReport:
    """
    Play a learner against the spike oracle.

    The oracle answers epsilon at every query; the hidden point is resolved
    after the run, away from every query, so the best fixed action scores
    -epsilon per round.
    """
    config = config if config is not None else ExperimentConfig()
    seed = config.seed if seed is None else seed
    epsilon = clamp_epsilon(epsilon)
    cell = replace(config, T=int(horizon))
    learner_rng, oracle_rng = spawn_streams(seed, 2)
    params = cell.learner_params(epsilon)
    learner = make_learner(algorithm, params, kappa=cell.kappa, rho=cell.rho)
    oracle = SpikeOracle(epsilon)

    records = _play(learner, cell.T, learner_rng, lambda t, y: spike_query(oracle, y))

    loss_sum = math.fsum(r.loss for r in records)
    x_hat = recommend(records)
    gap = spike_gap(oracle, x_hat, learner.action_set, oracle_rng)
    optimum = math.fsum(oracle.value(oracle.hidden_point) for _ in records)
    report = LowerBoundReport(
        algorithm=algorithm,
        epsilon=epsilon,
        horizon=cell.T,
        loss_sum=loss_sum,
        deferred_optimum=optimum,
        regret=loss_sum - optimum,
        gap=gap,
        gap_lower_bound=blackbox_lower_bound(epsilon),
        gap_upper_bound=blackbox_bound(cell.d, cell.T, cell.nu, params.delta, epsilon, cell.G, cell.D),
        recommended=x_hat,
        queries=len(oracle.queries),
    )
    logger.info(f"✅ lower bound {algorithm} eps={epsilon:g} T={cell.T}: regret {report.regret:g}, gap {gap:g}")
    return report
