"""
Checks evaluated on a completed trace of RoundRecords.

Each check yields an InvariantResult whose residual is the worst violation
found (0 when the property holds everywhere). Checks that only hold under
conditions the parameters do not meet are marked not applicable.
"""

import math
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from bandit.algorithms import BanditLearner, RoundRecord
from bandit.errors import BarrierDomainError

from .bounds import lemma4_radius, lemma5_radius

FEASIBILITY_TOLERANCE = 1e-9
DIKIN_STEP_TOLERANCE = 1e-8
DUAL_NORM_TOLERANCE = 1e-8
FTRL_SLACK_PER_ROUND = 1e-6
LEMMA4_RANDOM_POINTS = 3


@dataclass(frozen=True)
class InvariantResult:
    name: str
    residual: float
    tolerance: float
    applicable: bool = True
    detail: str = ''

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.residual <= self.tolerance


def check_feasibility(learner: BanditLearner, records: Sequence[RoundRecord]) -> InvariantResult:
    D = learner.action_set.radius
    worst = max((float(np.linalg.norm(r.point)) - D for r in records), default=-math.inf)
    return InvariantResult('feasibility', max(0.0, worst), FEASIBILITY_TOLERANCE,
                           detail=f"max ||y_t|| - D = {worst:.3e}")


def check_unit_dikin_step(records: Sequence[RoundRecord]) -> InvariantResult:
    worst = max((abs(r.step_norm - 1.0) for r in records), default=0.0)
    return InvariantResult('unit_dikin_step', worst, DIKIN_STEP_TOLERANCE)


def check_estimator_dual_norm(learner: BanditLearner, records: Sequence[RoundRecord]) -> InvariantResult:
    d = learner.action_set.dimension
    worst = 0.0
    for r in records:
        expected = d * abs(r.loss)
        worst = max(worst, abs(r.estimator_dual_norm - expected) / max(1.0, expected))
    return InvariantResult('estimator_dual_norm', worst, DUAL_NORM_TOLERANCE)


def check_iterate_proximity(learner: BanditLearner, records: Sequence[RoundRecord]) -> InvariantResult:
    """||x'_{t+1} - x'_t||_{x'_t} < 4 d eta; meaningful only when 4 d eta < 1/2"""
    radius = lemma5_radius(learner.action_set.dimension, learner.params.eta)
    worst = max((r.movement_norm for r in records), default=0.0)
    applicable = learner.params.proximity_condition
    return InvariantResult('iterate_proximity', max(0.0, worst - radius), 0.0, applicable=applicable,
                           detail=f"max movement {worst:.4g} vs 4*d*eta = {radius:.4g}")


def check_shrunk_diameter(learner: BanditLearner, records: Sequence[RoundRecord],
                          comparator: np.ndarray, rng: np.random.Generator) -> InvariantResult:
    """||x'_t - h||_{x'_t} <= 2 (1/delta - 1)(nu + 2 sqrt(nu)) for the comparator and random h in K'_delta"""
    delta = learner.params.delta
    radius = lemma4_radius(delta, learner.barrier.effective_nu)
    shrunk = learner.action_set.shrink(delta)
    worst = 0.0
    for r in records:
        H = learner.barrier.eval(r.iterate).hessian
        samples = shrunk.radius / learner.action_set.radius * learner.action_set.sample_uniform(rng, LEMMA4_RANDOM_POINTS)
        for h in [comparator] + [learner.barrier.embed(s) for s in samples]:
            diff = r.iterate - h
            worst = max(worst, math.sqrt(max(float(diff @ H @ diff), 0.0)))
    residual = max(0.0, worst - radius) / radius
    return InvariantResult('shrunk_diameter', residual, 0.0, detail=f"max {worst:.4g} vs {radius:.4g}")


def check_ftrl_inequality(learner: BanditLearner, records: Sequence[RoundRecord],
                          comparator: np.ndarray) -> InvariantResult:
    """
    sum g.x'_t - sum g.h <= sum g.(x'_t - x'_{t+1}) + (R(h) - R(x'_1)) / eta

    Only stated for a constant learning rate.
    """
    T = len(records)
    tolerance = FTRL_SLACK_PER_ROUND * max(T, 1)
    etas = {r.eta for r in records}
    if len(etas) > 1:
        return InvariantResult('ftrl_inequality', 0.0, tolerance, applicable=False,
                               detail="learning rate varies across rounds")
    eta = learner.params.eta if not etas else etas.pop()
    try:
        r_h = learner.barrier.value(comparator)
    except BarrierDomainError:
        return InvariantResult('ftrl_inequality', 0.0, tolerance, applicable=False,
                               detail="comparator outside the barrier domain")
    r_1 = learner.barrier.value(learner.initial_iterate)
    lhs = math.fsum(float(r.estimator @ (r.iterate - comparator)) for r in records)
    stability = math.fsum(float(r.estimator @ (r.iterate - r.next_iterate)) for r in records)
    rhs = stability + (r_h - r_1) / eta
    return InvariantResult('ftrl_inequality', max(0.0, lhs - rhs), tolerance,
                           detail=f"lhs {lhs:.6g} <= rhs {rhs:.6g}")


def check_trace(learner: BanditLearner, records: Sequence[RoundRecord], comparator: np.ndarray,
                rng: np.random.Generator) -> Dict[str, InvariantResult]:
    """
    Run every trace check.

    Args:
        learner: the learner after the run (its parameters and barrier are used)
        records: the round records in order
        comparator: point in the barrier's space lying in the shrunk slice
        rng: generator for the random comparison points

    Returns:
        Mapping from check name to result
    """
    results = [
        check_feasibility(learner, records),
        check_unit_dikin_step(records),
        check_estimator_dual_norm(learner, records),
        check_iterate_proximity(learner, records),
        check_shrunk_diameter(learner, records, comparator, rng),
        check_ftrl_inequality(learner, records, comparator),
    ]
    return {r.name: r for r in results}
