import numpy as np
import pytest

from satbandit.core import (OraclePolicy, RandomPolicy, RegretTrace, RSPolicy,
                            StepOutcome, regret_update, rs_value,
                            subjective_regret)


def outcome(action, reward, p, step=0):
    return StepOutcome(chosen_action=action, observed_reward=reward,
                       expected_rewards=np.asarray(p, dtype=float), step=step)


class TestRsValue:
    def test_basic(self):
        assert rs_value(5, 10, 0.8, 0.6) == pytest.approx(0.1)

    def test_negative_below_aspiration(self):
        assert rs_value(10, 10, 0.4, 0.6) == pytest.approx(-0.2)

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            rs_value(0, 0, 0.5, 0.5)


class TestSubjectiveRegret:
    def test_balanced_series_is_zero(self):
        assert subjective_regret([0.7, 0.5], 0.6) == pytest.approx(0.0)

    def test_overachievement_is_negative(self):
        assert subjective_regret([0.9, 0.9], 0.6) == pytest.approx(-0.6)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            subjective_regret([], 0.6)


class TestRegretTrace:
    def test_cumulative_and_accuracy(self):
        tr = RegretTrace()
        tr.append(outcome(0, 1.0, [0.7, 0.5]))      # best choice
        tr.append(outcome(1, 0.0, [0.7, 0.5]))      # 0.2 regret
        assert tr.cumulative_regret == pytest.approx([0.0, 0.2])
        assert tr.cumulative_reward == pytest.approx([1.0, 1.0])
        assert tr.correct_rate == pytest.approx([1.0, 0.5])
        assert tr.chosen_actions == [0, 1]
        assert len(tr) == 2

    def test_regret_monotone_nondecreasing(self):
        rng = np.random.default_rng(0)
        tr = RegretTrace()
        for _ in range(200):
            p = rng.random(3)
            tr.append(outcome(int(rng.integers(3)), 0.0, p))
        diffs = np.diff(tr.cumulative_regret)
        assert np.all(diffs >= -1e-12)

    def test_ties_count_as_correct(self):
        tr = RegretTrace()
        tr.append(outcome(1, 1.0, [0.7, 0.7]))
        assert tr.correct_rate == [1.0]
        assert tr.cumulative_regret == [0.0]

    def test_regret_update_helper(self):
        tr = RegretTrace()
        assert regret_update(tr, outcome(0, 1.0, [0.5, 0.5])) is tr
        assert len(tr) == 1


class TestRSPolicy:
    def test_first_choice_is_action_zero(self):
        pol = RSPolicy(3, aleph=0.5)
        assert pol.select(None) == 0

    def test_incremental_mean(self):
        pol = RSPolicy(2, aleph=0.5)
        for r in (1.0, 0.0, 1.0, 1.0):
            pol.update(None, 0, r)
        assert pol.means[0] == pytest.approx(0.75)
        assert pol.counts[0] == 4

    def test_locks_onto_satisfying_arm(self):
        # arm 0 pays above the aspiration level, arm 1 below
        rng = np.random.default_rng(1)
        pol = RSPolicy(2, aleph=0.6)
        means = [0.8, 0.3]
        choices = []
        for t in range(2000):
            a = t % 2 if t < 20 else pol.select(None)
            pol.update(None, a, float(rng.random() < means[a]))
            choices.append(a)
        assert np.mean(choices[-500:]) < 0.05  # almost always arm 0


class TestTrivialPolicies:
    def test_random_policy_range_and_noop_update(self):
        pol = RandomPolicy(4, np.random.default_rng(0))
        draws = {pol.select(None) for _ in range(200)}
        assert draws == {0, 1, 2, 3}
        pol.update(None, 0, 1.0)  # must not raise

    def test_oracle_picks_best(self):
        pol = OraclePolicy(3)
        assert pol.select(None, np.array([0.1, 0.9, 0.3])) == 1

    def test_oracle_requires_rewards(self):
        with pytest.raises(ValueError):
            OraclePolicy(3).select(None)
