"""Neural policies sharing the bias-free MLP: the satisficing policy
(NeuralRS) with a pluggable reliability estimator, plus NeuralUCB and
NeuralTS with diagonal confidence accumulators.

All three keep a growing replay buffer and take one Adam step per
environment step on a uniformly sampled batch.
"""

from __future__ import annotations

import numpy as np

from .core import Policy
from .numeric import (AdamState, MlpParams, mlp_forward, mlp_init,
                      mlp_train_step, num_weights, output_gradients)


class ReplayBuffer:
    """Growable store of (context, action, reward) triples."""

    def __init__(self, dim: int, max_batch: int = 1024):
        self.dim = dim
        self.max_batch = max_batch
        self._cap = 1024
        self.X = np.zeros((self._cap, dim))
        self.actions = np.zeros(self._cap, dtype=np.int64)
        self.rewards = np.zeros(self._cap)
        self.size = 0

    def add(self, x: np.ndarray, action: int, reward: float) -> None:
        if self.size == self._cap:
            self._cap *= 2
            self.X = np.resize(self.X, (self._cap, self.dim))
            self.actions = np.resize(self.actions, self._cap)
            self.rewards = np.resize(self.rewards, self._cap)
        self.X[self.size] = x
        self.actions[self.size] = action
        self.rewards[self.size] = reward
        self.size += 1

    def sample(self, rng: np.random.Generator):
        """Uniform sample without replacement of min(size, max_batch) entries."""
        if self.size == 0:
            raise ValueError("empty buffer")
        m = min(self.size, self.max_batch)
        if m == self.size:
            idx = slice(0, self.size)
        else:
            idx = rng.choice(self.size, size=m, replace=False)
        return self.X[idx], self.actions[idx], self.rewards[idx]


class _NeuralPolicy(Policy):
    """Shared network, buffer, and per-step training loop."""

    def __init__(self, num_actions: int, dim: int, rng: np.random.Generator,
                 width: int = 128, depth: int = 2, learning_rate: float = 1e-3,
                 batch_size: int = 1024, init_scale: float = 1.0):
        self.num_actions = num_actions
        self.dim = dim
        self.rng = rng
        self.params = mlp_init(dim, num_actions, width, depth, rng, init_scale)
        self.adam = AdamState.for_params(self.params, learning_rate)
        self.buffer = ReplayBuffer(dim, batch_size)
        self.counts = np.zeros(num_actions)
        self.last_loss = float("nan")

    def train(self) -> float:
        X, a, r = self.buffer.sample(self.rng)
        self.last_loss = mlp_train_step(self.params, self.adam, X, a, r)
        return self.last_loss

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        self.buffer.add(x, action, reward)
        self.counts[action] += 1
        self._observe(x, action)
        self.train()

    def _observe(self, x: np.ndarray, action: int) -> None:
        pass


def neuralrs_value(outputs: np.ndarray, rho: np.ndarray, aleph: float) -> np.ndarray:
    """rho_i * (f_i - aleph) per action."""
    return rho * (outputs - aleph)


class NeuralRS(_NeuralPolicy):
    """Satisficing policy on network outputs with estimated trial-ratio
    reliability; estimator is one of kmeans / knn / xe / trial_ratio."""

    name = "neuralrs"

    def __init__(self, num_actions: int, dim: int, rng: np.random.Generator,
                 estimator, aleph: float = 0.65, **kw):
        super().__init__(num_actions, dim, rng, **kw)
        self.estimator = estimator
        self.aleph = aleph

    def select(self, x: np.ndarray) -> int:
        outputs, latent = mlp_forward(x, self.params)
        rho = self.estimator.rho(x, latent, outputs, self.counts)
        return int(np.argmax(neuralrs_value(outputs, rho, self.aleph)))

    def _observe(self, x: np.ndarray, action: int) -> None:
        if self.estimator.uses_latent:
            _, latent = mlp_forward(x, self.params)
        else:
            latent = None
        self.estimator.observe(x, latent, action)


class _DiagConfidencePolicy(_NeuralPolicy):
    """Diagonal gradient-outer-product confidence shared by UCB/TS variants."""

    def __init__(self, num_actions: int, dim: int, rng: np.random.Generator,
                 nu: float = 0.1, lam: float = 1e-5, **kw):
        super().__init__(num_actions, dim, rng, **kw)
        self.nu = nu
        self.lam = lam
        self.diag_confidence = np.full(num_weights(self.params), lam)

    def _scores_and_grads(self, x: np.ndarray):
        outputs, _ = mlp_forward(x, self.params)
        grads = output_gradients(x, self.params)
        var = (grads * grads / self.diag_confidence).sum(axis=1) / self.params.width
        return outputs, grads, var

    def _commit(self, grads: np.ndarray, action: int) -> None:
        self.diag_confidence += grads[action] * grads[action]


class NeuralUCB(_DiagConfidencePolicy):
    name = "neuralucb"

    def select(self, x: np.ndarray) -> int:
        outputs, grads, var = self._scores_and_grads(x)
        action = int(np.argmax(outputs + self.nu * np.sqrt(var)))
        self._commit(grads, action)
        return action


class NeuralTS(_DiagConfidencePolicy):
    name = "neuralts"

    def select(self, x: np.ndarray) -> int:
        outputs, grads, var = self._scores_and_grads(x)
        draws = self.rng.normal(outputs, self.nu * np.sqrt(var))
        action = int(np.argmax(draws))
        self._commit(grads, action)
        return action
