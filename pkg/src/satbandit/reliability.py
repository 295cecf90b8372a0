"""Interchangeable reliability estimators for the neural satisficing policy.

Four candidates: online k-means centroids over the network's latent space,
kNN over raw contexts (shared with the linear satisficing policy),
softmax of the network outputs (XE), and the plain per-action trial ratio.
Every estimator returns a probability vector over actions.
"""

from __future__ import annotations

import numpy as np

from .linear import EpisodicMemory, knn_reliability
from .numeric import softmax


class CentroidBank:
    """Per-action centroids with cumulative weights and decayed counts.

    Centroids live in the latent space of the value network.  ``gamma``
    decays both the per-centroid mass W and the per-action count n every
    step, so old evidence fades.
    """

    def __init__(self, num_actions: int, latent_dim: int, centroids_per_action: int,
                 rng: np.random.Generator, gamma: float = 0.99,
                 init_std: float = 1.0, eps: float = 1e-8):
        if not 0.0 < gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        self.num_actions = num_actions
        self.latent_dim = latent_dim
        self.m = centroids_per_action
        self.gamma = gamma
        self.eps = eps
        self.centroids = rng.normal(0.0, init_std,
                                    size=(num_actions, centroids_per_action, latent_dim))
        self.weights = np.zeros((num_actions, centroids_per_action))
        self.counts = np.zeros(num_actions)


def centroid_distances(z: np.ndarray, bank: CentroidBank, action: int) -> np.ndarray:
    """Euclidean distance from z to each of the action's centroids."""
    if z.shape != (bank.latent_dim,):
        raise ValueError(f"latent dimension mismatch: {z.shape} vs ({bank.latent_dim},)")
    return np.linalg.norm(bank.centroids[action] - z, axis=1)


def centroid_weights(d: np.ndarray, eps: float) -> np.ndarray:
    """w_m = 1 / (d_m + eps)."""
    return 1.0 / (d + eps)


def kmeans_rho(bank: CentroidBank, weights: np.ndarray) -> np.ndarray:
    """softmax over actions of (n_i / M) * sum_m w_{i,m}.

    ``weights`` is the (K, M) array from ``centroid_weights`` per action.
    """
    nbar = (bank.counts / bank.m) * weights.sum(axis=1)
    return softmax(nbar)


def centroid_commit(bank: CentroidBank, action: int, z: np.ndarray,
                    weights: np.ndarray) -> CentroidBank:
    """Fold z into the chosen action's centroids, then apply global decay.

    Chosen action: c <- (W c + w z) / (W + w), then W <- gamma W + w and
    n <- gamma n + 1.  All other actions: W and n decay only.
    """
    w = weights[action]
    W = bank.weights[action]
    denom = (W + w)[:, None]
    bank.centroids[action] = (W[:, None] * bank.centroids[action] + w[:, None] * z) / denom
    bank.weights *= bank.gamma
    bank.counts *= bank.gamma
    bank.weights[action] += w
    bank.counts[action] += 1.0
    return bank


def xe_reliability(outputs: np.ndarray) -> np.ndarray:
    """Model selection probability (softmax of network outputs) as reliability."""
    return softmax(outputs)


def trial_ratio_reliability(counts: np.ndarray) -> np.ndarray:
    """rho_i = n_i / N."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total < 1:
        raise ValueError("no trials recorded")
    return counts / total


class KmeansEstimator:
    """Latent-space k-means reliability with decayed masses."""

    kind = "kmeans"
    uses_latent = True

    def __init__(self, bank: CentroidBank):
        self.bank = bank

    def rho(self, x: np.ndarray, latent: np.ndarray, outputs: np.ndarray,
            counts: np.ndarray) -> np.ndarray:
        w = np.empty((self.bank.num_actions, self.bank.m))
        for i in range(self.bank.num_actions):
            w[i] = centroid_weights(centroid_distances(latent, self.bank, i), self.bank.eps)
        return kmeans_rho(self.bank, w)

    def observe(self, x: np.ndarray, latent: np.ndarray, action: int) -> None:
        w = np.empty((self.bank.num_actions, self.bank.m))
        for i in range(self.bank.num_actions):
            w[i] = centroid_weights(centroid_distances(latent, self.bank, i), self.bank.eps)
        centroid_commit(self.bank, action, latent, w)


class KnnEstimator:
    """kNN trial-ratio over raw contexts via the shared episodic memory."""

    kind = "knn"
    uses_latent = False

    def __init__(self, memory: EpisodicMemory, k: int = 50, eps: float = 1e-4):
        self.memory = memory
        self.k = k
        self.eps = eps

    def rho(self, x, latent, outputs, counts) -> np.ndarray:
        k = min(self.k, self.memory.size)
        if k == 0:
            return np.full(len(counts), 1.0 / len(counts))
        return knn_reliability(x, self.memory, k, self.eps)

    def observe(self, x, latent, action: int) -> None:
        self.memory.append(x, action)


class XeEstimator:
    kind = "xe"
    uses_latent = False

    def rho(self, x, latent, outputs, counts) -> np.ndarray:
        return xe_reliability(outputs)

    def observe(self, x, latent, action: int) -> None:
        pass


class TrialRatioEstimator:
    kind = "trial_ratio"
    uses_latent = False

    def rho(self, x, latent, outputs, counts) -> np.ndarray:
        return trial_ratio_reliability(counts)

    def observe(self, x, latent, action: int) -> None:
        pass
