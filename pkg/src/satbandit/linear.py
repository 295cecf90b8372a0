"""Linear-model policies: LinGreedy, LinUCB, LinTS, and RegLinRS with
episodic memory and a kNN trial-ratio estimate.

Each policy keeps per-action ridge statistics A_i = I + sum x x^T and
b_i = sum r x over the steps that action was chosen.  theta_i solves
A_i theta_i = b_i; linear policies re-solve theta on a fixed cadence
(``solve_every``) rather than every step.
"""

from __future__ import annotations

import numpy as np

from .core import Policy
from .numeric import solve_linear_system


class LinearStats:
    """Per-action precision matrices and response vectors."""

    def __init__(self, num_actions: int, dim: int):
        self.num_actions = num_actions
        self.dim = dim
        self.A = np.tile(np.eye(dim), (num_actions, 1, 1))
        self.b = np.zeros((num_actions, dim))
        self.theta = np.zeros((num_actions, dim))
        self.counts = np.zeros(num_actions)
        self.sum_sq_rewards = np.zeros(num_actions)

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        self.A[action] += np.outer(x, x)
        self.b[action] += reward * x
        self.counts[action] += 1
        self.sum_sq_rewards[action] += reward * reward

    def solve(self, action: int | None = None) -> None:
        """Refresh theta from (A, b) for one action or all."""
        actions = range(self.num_actions) if action is None else [action]
        for i in actions:
            self.theta[i] = solve_linear_system(self.A[i], self.b[i])

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.theta @ x


def linear_update(stats: LinearStats, x: np.ndarray, action: int, reward: float,
                  eager: bool = True) -> LinearStats:
    """Accumulate one observation; re-solves theta for that action when eager."""
    stats.update(x, action, reward)
    if eager:
        stats.solve(action)
    return stats


class _LinearPolicy(Policy):
    """Shared stats bookkeeping with a batched theta re-solve cadence."""

    def __init__(self, num_actions: int, dim: int, solve_every: int = 20):
        self.stats = LinearStats(num_actions, dim)
        self.solve_every = max(1, solve_every)
        self._updates = 0

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        self.stats.update(x, action, reward)
        self._updates += 1
        if self._updates % self.solve_every == 0:
            self.stats.solve()

    def refresh(self) -> None:
        """Force a theta re-solve (called by the harness at warmup end)."""
        self.stats.solve()


def lingreedy_select(x: np.ndarray, stats: LinearStats) -> int:
    """argmax theta_i . x, ties to the lowest index."""
    return int(np.argmax(stats.predict(x)))


def linucb_select(x: np.ndarray, stats: LinearStats, alpha: float) -> int:
    """argmax theta_i . x + alpha * sqrt(x^T A_i^{-1} x)."""
    scores = stats.predict(x).copy()
    if alpha != 0.0:
        for i in range(stats.num_actions):
            scores[i] += alpha * np.sqrt(x @ solve_linear_system(stats.A[i], x))
    return int(np.argmax(scores))


def lints_select(x: np.ndarray, stats: LinearStats, lam: float,
                 alpha_prior: float, beta_prior: float,
                 rng: np.random.Generator) -> int:
    """Thompson draw: theta_i ~ N(theta_i, lam * sigma_i^2 * A_i^{-1}).

    sigma_i^2 is drawn from the inverse-gamma noise posterior with prior
    (alpha_prior, beta_prior), updated from that action's residual mass.
    """
    scores = np.empty(stats.num_actions)
    for i in range(stats.num_actions):
        a_post = alpha_prior + stats.counts[i] / 2.0
        resid = stats.sum_sq_rewards[i] - stats.theta[i] @ stats.b[i]
        b_post = beta_prior + 0.5 * max(resid, 0.0)
        sigma2 = b_post / rng.gamma(a_post)
        L = np.linalg.cholesky(stats.A[i])
        z = rng.standard_normal(stats.dim)
        # u = L^{-T} z has covariance A^{-1}
        u = np.linalg.solve(L.T, z)
        theta_draw = stats.theta[i] + np.sqrt(lam * sigma2) * u
        scores[i] = theta_draw @ x
    return int(np.argmax(scores))


class LinGreedy(_LinearPolicy):
    name = "lingreedy"

    def select(self, x: np.ndarray) -> int:
        return lingreedy_select(x, self.stats)


class LinUCB(_LinearPolicy):
    name = "linucb"

    def __init__(self, num_actions: int, dim: int, alpha: float = 0.1,
                 solve_every: int = 20):
        super().__init__(num_actions, dim, solve_every)
        self.alpha = alpha

    def select(self, x: np.ndarray) -> int:
        return linucb_select(x, self.stats, self.alpha)


class LinTS(_LinearPolicy):
    name = "lints"

    def __init__(self, num_actions: int, dim: int, rng: np.random.Generator,
                 lam: float = 0.25, alpha_prior: float = 6.0,
                 beta_prior: float = 6.0, solve_every: int = 20):
        super().__init__(num_actions, dim, solve_every)
        self.rng = rng
        self.lam = lam
        self.alpha_prior = alpha_prior
        self.beta_prior = beta_prior

    def select(self, x: np.ndarray) -> int:
        return lints_select(x, self.stats, self.lam, self.alpha_prior,
                            self.beta_prior, self.rng)


class EpisodicMemory:
    """Ring buffer of (feature vector, one-hot action record) pairs."""

    def __init__(self, capacity: int, dim: int, num_actions: int):
        self.capacity = capacity
        self.features = np.zeros((capacity, dim))
        self.records = np.zeros((capacity, num_actions))
        self.size = 0
        self._next = 0

    def append(self, x: np.ndarray, action: int) -> None:
        self.features[self._next] = x
        self.records[self._next] = 0.0
        self.records[self._next, action] = 1.0
        self._next = (self._next + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def nearest(self, x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k smallest squared distances and their one-hot records.

        Equal distances break toward the lower buffer index (stable sort).
        """
        if self.size < k:
            raise ValueError(f"memory has {self.size} entries, need {k}")
        diff = self.features[:self.size] - x
        d2 = np.einsum("ij,ij->i", diff, diff)
        if k == self.size:
            idx = np.argsort(d2, kind="stable")
        else:
            kth = np.partition(d2, k - 1)[k - 1]
            strict = np.nonzero(d2 < kth)[0]
            ties = np.nonzero(d2 == kth)[0]
            idx = np.concatenate([strict, ties[: k - len(strict)]])
            idx = idx[np.argsort(d2[idx], kind="stable")]
        return d2[idx], self.records[idx]


def knn_reliability(x: np.ndarray, memory: EpisodicMemory, k: int,
                    eps: float = 1e-4) -> np.ndarray:
    """Trial-ratio approximation from the k nearest memory entries.

    Sim_j = eps / (d2_j / mean(d2) + eps); phi = sum_j normalized(Sim)_j u_j.
    Returns a probability vector over actions.
    """
    d2, records = memory.nearest(x, k)
    d2bar = d2.mean()
    ratio = d2 / d2bar if d2bar > 0 else np.zeros_like(d2)
    sim = eps / (ratio + eps)
    w = sim / sim.sum()
    return w @ records


def reglinrs_value(x: np.ndarray, stats: LinearStats, phi: np.ndarray,
                   aleph: float) -> np.ndarray:
    """phi_i * (theta_i . x - aleph) per action."""
    return phi * (stats.predict(x) - aleph)


class RegLinRS(_LinearPolicy):
    """Satisficing policy on ridge estimates with kNN trial-ratio reliability."""

    name = "reglinrs"

    def __init__(self, num_actions: int, dim: int, aleph: float = 0.65,
                 k: int = 50, memory_size: int = 10000, eps: float = 1e-4,
                 solve_every: int = 20):
        super().__init__(num_actions, dim, solve_every)
        self.aleph = aleph
        self.k = k
        self.eps = eps
        self.memory = EpisodicMemory(memory_size, dim, num_actions)

    def select(self, x: np.ndarray) -> int:
        # warmup fills the memory; fall back to fewer neighbors if K*10 < k
        k = min(self.k, self.memory.size)
        if k == 0:
            return 0
        phi = knn_reliability(x, self.memory, k, self.eps)
        return int(np.argmax(reglinrs_value(x, self.stats, phi, self.aleph)))

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        super().update(x, action, reward)
        self.memory.append(x, action)
