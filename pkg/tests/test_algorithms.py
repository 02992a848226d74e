"""
Tests for the learners and their parameter choices
"""

import logging
import math

import numpy as np
import pytest

from bandit.algorithms import (
    ALGORITHMS,
    ClassicScrible,
    IncreasingLrScrible,
    LearnerParams,
    LiftedScrible,
    default_params,
    make_learner,
    recommend,
)
from bandit.errors import InvalidArgumentError


@pytest.fixture
def params():
    """Small learner parameters with 4 d eta < 1/2"""
    return LearnerParams(eta=0.01, delta=0.01, dimension=3, horizon=50)


def play(learner, rng, losses):
    """Run act/update with a fixed loss sequence and collect the records"""
    records = []
    for value in losses:
        learner.act(rng)
        records.append(learner.update(value))
    return records


class TestDefaultParams:
    """Test the parameter choices of the regret theorem and the experiments"""

    @pytest.mark.unit
    def test_theorem_choice_epsilon_zero(self):
        """Test delta = 1/T^2 and eta = sqrt(nu ln(1/delta)) / (2 d sqrt(T))"""
        p = default_params(0.0, 2000, 5, nu=800.0)
        assert p.delta == pytest.approx(2.5e-7, rel=1e-15)
        expected_eta = math.sqrt(800.0 * math.log(4e6)) / (2.0 * 5 * math.sqrt(2000))
        assert p.eta == pytest.approx(expected_eta, rel=1e-12)

    @pytest.mark.unit
    def test_theorem_choice_positive_epsilon(self):
        """Test delta = sqrt(epsilon)"""
        assert default_params(0.25, 2000, 5, nu=1.0).delta == 0.5

    @pytest.mark.unit
    def test_section7_choice(self):
        """Test eta = 20 sqrt(ln(1/delta)) / (4 d sqrt(T))"""
        p = default_params(0.0, 2000, 5, nu=1.0, variant='section7')
        assert p.eta == pytest.approx(20.0 * math.sqrt(math.log(4e6)) / (20.0 * math.sqrt(2000)), rel=1e-12)

    @pytest.mark.unit
    @pytest.mark.parametrize("epsilon", [1.0, -0.1, 1.5])
    def test_rejects_epsilon_outside_range(self, epsilon):
        """Test epsilon must lie in [0, 1)"""
        with pytest.raises(InvalidArgumentError):
            default_params(epsilon, 100, 3, nu=1.0)

    @pytest.mark.unit
    def test_degenerate_horizon_one(self):
        """Test T = 1 with epsilon = 0 has ln(1/delta) = 0"""
        with pytest.raises(InvalidArgumentError):
            default_params(0.0, 1, 3, nu=1.0)

    @pytest.mark.unit
    def test_unknown_variant(self):
        """Test only the two parameter variants exist"""
        with pytest.raises(InvalidArgumentError):
            default_params(0.0, 100, 3, nu=1.0, variant='other')

    @pytest.mark.unit
    def test_proximity_warning(self, caplog):
        """Test a warning is logged when 4 d eta >= 1/2"""
        with caplog.at_level(logging.WARNING):
            p = LearnerParams(eta=0.1, delta=0.1, dimension=5, horizon=10)
        assert not p.proximity_condition
        assert "4*d*eta" in caplog.text

    @pytest.mark.unit
    def test_invalid_learner_params(self):
        """Test eta > 0, delta in (0, 1), d and T >= 1"""
        with pytest.raises(InvalidArgumentError):
            LearnerParams(eta=0.0, delta=0.1, dimension=2, horizon=10)
        with pytest.raises(InvalidArgumentError):
            LearnerParams(eta=0.1, delta=1.0, dimension=2, horizon=10)
        with pytest.raises(InvalidArgumentError):
            LearnerParams(eta=0.1, delta=0.1, dimension=0, horizon=10)


class TestLiftedScrible:
    """Test one round of the lifted learner"""

    @pytest.mark.unit
    def test_initial_iterate_is_center(self, params):
        """Test x'_1 = (0, 1)"""
        learner = LiftedScrible(params)
        np.testing.assert_array_equal(learner.state.iterate, [0.0, 0.0, 0.0, 1.0])

    @pytest.mark.unit
    def test_played_point_lies_on_slice_and_in_k(self, params, rng):
        """Test y_t in K and the lifted play has last coordinate exactly 1"""
        learner = LiftedScrible(params)
        for _ in range(20):
            y = learner.act(rng)
            assert learner.state.pending.played[-1] == 1.0
            assert np.linalg.norm(y) <= params.radius + 1e-9
            learner.update(0.3)

    @pytest.mark.unit
    def test_round_record_identities(self, params, rng):
        """Test the unit Dikin step and ||g||* = d |f|"""
        learner = LiftedScrible(params)
        records = play(learner, rng, [0.5, -0.2, 0.9, 0.0, -1.0])
        for r in records:
            assert r.step_norm == pytest.approx(1.0, abs=1e-8)
            assert r.estimator_dual_norm == pytest.approx(3 * abs(r.loss), abs=1e-8)
            assert r.mu @ learner.barrier.hessian_root(r.iterate).inv_sqrt[:, -1] == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.unit
    def test_zero_loss_keeps_iterate(self, params, rng):
        """Test a zero loss leaves the iterate bitwise unchanged"""
        learner = LiftedScrible(params)
        play(learner, rng, [0.4, -0.7])
        before = learner.state.iterate.copy()
        record = play(learner, rng, [0.0])[0]
        np.testing.assert_array_equal(learner.state.iterate, before)
        np.testing.assert_array_equal(record.estimator, np.zeros(4))

    @pytest.mark.unit
    def test_act_twice_raises(self, params, rng):
        """Test the act/update protocol is enforced"""
        learner = LiftedScrible(params)
        learner.act(rng)
        with pytest.raises(InvalidArgumentError):
            learner.act(rng)

    @pytest.mark.unit
    def test_update_without_act_raises(self, params):
        """Test update needs a pending round"""
        with pytest.raises(InvalidArgumentError):
            LiftedScrible(params).update(0.1)

    @pytest.mark.unit
    def test_loss_above_one_is_counted(self, params, rng, caplog):
        """Test |loss| > 1 logs a warning once and is counted every time"""
        learner = LiftedScrible(params)
        with caplog.at_level(logging.WARNING):
            play(learner, rng, [1.5, 2.0, 0.5])
        assert learner.normalization_violations == 2
        assert caplog.text.count("regret bounds assume") == 1

    @pytest.mark.unit
    def test_same_seed_same_trace(self, params):
        """Test a learner is deterministic given its generator"""
        a = play(LiftedScrible(params), np.random.default_rng(3), [0.2, -0.4, 0.6])
        b = play(LiftedScrible(params), np.random.default_rng(3), [0.2, -0.4, 0.6])
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.next_iterate, rb.next_iterate)


class TestClassicScrible:
    """Test SCRiBLe on K without lifting"""

    @pytest.mark.unit
    def test_plays_inside_k_with_unit_step(self, params, rng):
        """Test feasibility and the unit Dikin step"""
        learner = ClassicScrible(params)
        assert learner.barrier.space_dimension == 3
        records = play(learner, rng, [0.5, -0.5, 0.25])
        for r in records:
            assert np.linalg.norm(r.point) <= params.radius + 1e-9
            assert r.step_norm == pytest.approx(1.0, abs=1e-8)
            assert r.estimator_dual_norm == pytest.approx(3 * abs(r.loss), abs=1e-8)


class TestIncreasingLrScrible:
    """Test the increasing-learning-rate baseline"""

    @pytest.mark.unit
    def test_kappa_one_matches_lifted(self, params):
        """Test kappa = 1 reproduces the lifted learner exactly"""
        losses = [0.3, -0.6, 0.8, 0.1]
        a = play(LiftedScrible(params), np.random.default_rng(11), losses)
        b = play(IncreasingLrScrible(params, kappa=1.0), np.random.default_rng(11), losses)
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.next_iterate, rb.next_iterate)

    @pytest.mark.unit
    def test_rate_grows_when_iterate_moves(self, params, rng):
        """Test eta_t = eta kappa^m with m counting moves larger than rho"""
        learner = IncreasingLrScrible(params, kappa=2.0, rho=0.0)
        records = play(learner, rng, [0.5, 0.5, 0.5])
        assert learner.increments >= 1
        assert learner.learning_rate() == pytest.approx(params.eta * 2.0 ** learner.increments)
        assert records[-1].eta > records[0].eta

    @pytest.mark.unit
    @pytest.mark.parametrize("kappa,rho", [(1.05, 0.0), (1.05, 1e-3), (None, None)])
    def test_schedule_is_monotone_and_capped(self, params, rng, kappa, rho):
        """Test m_t never decreases and eta_t <= eta kappa^T in every round"""
        learner = IncreasingLrScrible(params, kappa=kappa, rho=rho)
        cap = params.eta * learner.kappa ** params.horizon
        counts, rates = [], []
        for t in range(params.horizon):
            learner.act(rng)
            record = learner.update(0.9 * math.sin(t + 1.0))
            counts.append(learner.increments)
            rates.append(record.eta)
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] <= params.horizon
        assert max(rates) <= cap
        assert rates == sorted(rates)

    @pytest.mark.unit
    def test_default_kappa_and_rho(self, params):
        """Test kappa = exp(1/(d ln T)) and rho = 2 d eta"""
        learner = IncreasingLrScrible(params)
        assert learner.kappa == pytest.approx(math.exp(1.0 / (3 * math.log(50))))
        assert learner.rho == pytest.approx(2 * 3 * 0.01)

    @pytest.mark.unit
    def test_rejects_kappa_below_one(self, params):
        """Test the learning rate cannot shrink"""
        with pytest.raises(InvalidArgumentError):
            IncreasingLrScrible(params, kappa=0.5)


class TestRegistry:
    """Test the learner registry and the recommendation rule"""

    @pytest.mark.unit
    def test_registry_names(self):
        """Test the three learners are registered"""
        assert set(ALGORITHMS) == {'lifted', 'classic', 'increasing_lr'}

    @pytest.mark.unit
    def test_make_learner(self, params):
        """Test make_learner builds the right class and passes options"""
        assert isinstance(make_learner('classic', params), ClassicScrible)
        learner = make_learner('increasing_lr', params, kappa=1.5, rho=0.2)
        assert learner.kappa == 1.5 and learner.rho == 0.2
        with pytest.raises(InvalidArgumentError):
            make_learner('unknown', params)

    @pytest.mark.unit
    def test_recommend_takes_earliest_minimum(self, params, rng):
        """Test the recommended point is the first play with the smallest loss"""
        learner = LiftedScrible(params)
        records = play(learner, rng, [0.5, -0.3, 0.2, -0.3])
        np.testing.assert_array_equal(recommend(records), records[1].point)
        with pytest.raises(InvalidArgumentError):
            recommend([])
