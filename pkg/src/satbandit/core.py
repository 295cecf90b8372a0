"""Core bandit abstractions: step outcomes, regret accounting, the policy
contract, and the basic aspiration-level (RS) value function."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class StepOutcome:
    """One environment interaction.

    ``expected_rewards`` is the environment oracle row, used only for regret
    accounting; policies never see it.
    """

    chosen_action: int
    observed_reward: float
    expected_rewards: np.ndarray
    step: int


class RegretTrace:
    """Append-only per-run record of cumulative regret, reward, correctness."""

    def __init__(self):
        self.cumulative_regret: list[float] = []
        self.cumulative_reward: list[float] = []
        self.correct_rate: list[float] = []
        self.chosen_actions: list[int] = []
        self._correct = 0

    def __len__(self) -> int:
        return len(self.cumulative_regret)

    def append(self, outcome: StepOutcome) -> None:
        p = outcome.expected_rewards
        gap = float(p.max() - p[outcome.chosen_action])
        prev_regret = self.cumulative_regret[-1] if self.cumulative_regret else 0.0
        prev_reward = self.cumulative_reward[-1] if self.cumulative_reward else 0.0
        self.cumulative_regret.append(prev_regret + gap)
        self.cumulative_reward.append(prev_reward + outcome.observed_reward)
        # argmax ties count any maximizer as correct
        if p[outcome.chosen_action] >= p.max():
            self._correct += 1
        self.correct_rate.append(self._correct / (len(self.cumulative_regret)))
        self.chosen_actions.append(outcome.chosen_action)


def regret_update(trace: RegretTrace, outcome: StepOutcome) -> RegretTrace:
    """Append one outcome to the trace (mutates and returns it)."""
    trace.append(outcome)
    return trace


def subjective_regret(received: np.ndarray, aleph: float) -> float:
    """Cumulative shortfall of received value below the aspiration level.

    Negative when the agent over-achieves.
    """
    received = np.asarray(received, dtype=float)
    if received.size == 0:
        raise ValueError("empty series")
    return float(np.sum(aleph - received))


def rs_value(n_i: float, N: float, E_i: float, aleph: float) -> float:
    """(n_i / N) * (E_i - aleph): reliability-weighted gap to the aspiration level."""
    if N <= 0:
        raise ValueError("total trial count must be >= 1")
    return (n_i / N) * (E_i - aleph)


class Policy:
    """Behavioral contract every policy implements.

    ``select`` must be deterministic given internal state and the policy's
    RNG state; ``update`` never observes expected rewards.
    """

    name = "policy"
    uses_oracle = False  # harness passes expected_rewards to select when True

    def select(self, x: np.ndarray) -> int:
        raise NotImplementedError

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        raise NotImplementedError


class RSPolicy(Policy):
    """Basic (non-contextual) aspiration-level policy.

    Keeps per-action trial counts and incremental reward means; picks
    argmax of (n_i/N)(E_i - aleph), ties to the lowest index.
    """

    name = "rs"

    def __init__(self, num_actions: int, aleph: float):
        self.num_actions = num_actions
        self.aleph = aleph
        self.counts = np.zeros(num_actions)
        self.means = np.zeros(num_actions)

    def select(self, x: np.ndarray) -> int:
        N = self.counts.sum()
        if N < 1:
            return 0
        values = (self.counts / N) * (self.means - self.aleph)
        return int(np.argmax(values))

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        self.counts[action] += 1
        self.means[action] += (reward - self.means[action]) / self.counts[action]


class RandomPolicy(Policy):
    """Uniform-random action choice."""

    name = "random"

    def __init__(self, num_actions: int, rng: np.random.Generator):
        self.num_actions = num_actions
        self.rng = rng

    def select(self, x: np.ndarray) -> int:
        return int(self.rng.integers(self.num_actions))

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        pass


class OraclePolicy(Policy):
    """Cheating baseline: picks the argmax of the hidden expected rewards."""

    name = "oracle"
    uses_oracle = True

    def __init__(self, num_actions: int):
        self.num_actions = num_actions

    def select(self, x: np.ndarray, expected_rewards: np.ndarray | None = None) -> int:
        if expected_rewards is None:
            raise ValueError("oracle policy requires the expected-rewards row")
        return int(np.argmax(expected_rewards))

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        pass
