"""Bandit environments: a synthetic linear-reward generator, a
Statlog-Shuttle classification-as-bandit adapter, and file ingestion.

Datasets are immutable after construction.  A dataset row t carries the
served context and the hidden expected-reward vector for every action;
``env_step`` turns a (row, action) pair into a reward draw.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import StepOutcome


class IngestionError(Exception):
    """Raised when a dataset file cannot be parsed."""


@dataclass
class BanditDataset:
    contexts: np.ndarray          # (n, d)
    expected_rewards: np.ndarray  # (n, K), entries in [0, 1]
    num_actions: int
    reward_kind: str              # "bernoulli" | "deterministic"
    name: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.contexts) != len(self.expected_rewards):
            raise ValueError("contexts and expected_rewards length mismatch")
        if self.reward_kind not in ("bernoulli", "deterministic"):
            raise ValueError(f"unknown reward kind {self.reward_kind!r}")

    def __len__(self) -> int:
        return len(self.contexts)

    @property
    def dim(self) -> int:
        return self.contexts.shape[1]

    def row(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Context and expected-reward row for step t, cycling past the end."""
        i = t % len(self)
        return self.contexts[i], self.expected_rewards[i]


@dataclass
class ArtificialConfig:
    dim: int = 64
    num_actions: int = 4
    target_top_mean: float = 0.7
    num_points: int = 10000
    pool_size: int = 20
    pool_spread: float = 1.0
    context_noise_std: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.num_actions < 2 or self.num_points < 1:
            raise ValueError("invalid artificial-dataset config")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if not 0.0 < self.target_top_mean < 1.0:
            raise ValueError("target_top_mean must be in (0, 1)")


def generate_artificial(cfg: ArtificialConfig) -> BanditDataset:
    """Synthetic linear-reward dataset.

    Each action i has a unit-norm parameter vector theta_i; a pool of
    ``pool_size`` base contexts lies on the unit sphere.  Expected rewards
    are an affine rescale of theta_i . x, calibrated on the noise-free pool
    so the mean best-action expected reward equals ``target_top_mean``.
    Each of the ``num_points`` served rows picks a pool entry and adds small
    Gaussian noise, so base contexts recur with fresh noise and fresh
    reward draws.
    """
    rng = np.random.default_rng(cfg.seed)
    thetas = rng.normal(size=(cfg.num_actions, cfg.dim))
    thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    # base contexts cluster around the arm parameter directions
    # (pool_spread controls the cluster width), so each context has one
    # clearly-best arm and the aspiration level can separate it from the rest
    anchor = thetas[rng.integers(0, cfg.num_actions, size=cfg.pool_size)]
    base = anchor + cfg.pool_spread * rng.normal(size=(cfg.pool_size, cfg.dim)) / np.sqrt(cfg.dim)
    base /= np.linalg.norm(base, axis=1, keepdims=True)

    raw = base @ thetas.T  # (pool, K) in [-1, 1]
    # affine map p = 0.5 + a * raw, with a chosen so the per-step best
    # action's mean expected reward equals the target
    mean_best_raw = float(raw.max(axis=1).mean())
    scale = (cfg.target_top_mean - 0.5) / mean_best_raw
    pool_p = np.clip(0.5 + scale * raw, 0.0, 1.0)

    assign = rng.integers(0, cfg.pool_size, size=cfg.num_points)
    p = pool_p[assign]
    contexts = base[assign] + rng.normal(0.0, cfg.context_noise_std,
                                         size=(cfg.num_points, cfg.dim))
    return BanditDataset(
        contexts=contexts,
        expected_rewards=p,
        num_actions=cfg.num_actions,
        reward_kind="bernoulli",
        name="artificial",
        metadata={
            "dim": cfg.dim,
            "seed": cfg.seed,
            "reward_scale": scale,
            "context_noise_std": cfg.context_noise_std,
            "mean_best_expected_reward": float(p.max(axis=1).mean()),
        },
    )


def load_shuttle(path: str, steps: int | None = None, seed: int = 0) -> BanditDataset:
    """Statlog-Shuttle file -> 7-action classification bandit.

    Each line: whitespace-separated integers, last column the class label in
    1..7.  Features are min-max normalized per column; the expected-reward
    row is the one-hot of the true class.  Rows are shuffled with ``seed``;
    if ``steps`` exceeds the file length the dataset cycles at play time.
    """
    feats = []
    labels = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    values = [int(tok) for tok in line.split()]
                except ValueError as exc:
                    raise IngestionError(f"{path}:{lineno}: non-integer token") from exc
                if len(values) < 2:
                    raise IngestionError(f"{path}:{lineno}: too few columns")
                label = values[-1]
                if not 1 <= label <= 7:
                    raise IngestionError(f"{path}:{lineno}: class label {label} outside 1..7")
                feats.append(values[:-1])
                labels.append(label - 1)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if not feats:
        raise IngestionError(f"{path}: no records")
    widths = {len(f) for f in feats}
    if len(widths) != 1:
        raise IngestionError(f"{path}: inconsistent column counts {sorted(widths)}")

    X = np.array(feats, dtype=float)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    X = (X - lo) / span

    order = np.random.default_rng(seed).permutation(len(X))
    X = X[order]
    labels = np.array(labels)[order]
    if steps is not None and steps < len(X):
        X = X[:steps]
        labels = labels[:steps]

    p = np.zeros((len(X), 7))
    p[np.arange(len(X)), labels] = 1.0
    return BanditDataset(
        contexts=X,
        expected_rewards=p,
        num_actions=7,
        reward_kind="deterministic",
        name="shuttle",
        metadata={"path": str(path), "dim": X.shape[1], "seed": seed,
                  "rows": len(X)},
    )


def env_step(ds: BanditDataset, t: int, action: int, rng: np.random.Generator) -> StepOutcome:
    """Play ``action`` at step t and draw the reward."""
    if t < 0:
        raise ValueError("negative step index")
    if not 0 <= action < ds.num_actions:
        raise ValueError(f"action {action} out of range for K={ds.num_actions}")
    _, p = ds.row(t)
    if ds.reward_kind == "bernoulli":
        reward = float(rng.random() < p[action])
    else:
        reward = float(p[action])
    return StepOutcome(chosen_action=action, observed_reward=reward,
                       expected_rewards=p, step=t)


def dataset_to_csv(ds: BanditDataset, path: str) -> None:
    """Export contexts and expected rewards (x0..x{d-1},p0..p{K-1})."""
    d, k = ds.dim, ds.num_actions
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(d)] + [f"p{i}" for i in range(k)])
        for x, p in zip(ds.contexts, ds.expected_rewards):
            w.writerow([f"{v:.12g}" for v in x] + [f"{v:.12g}" for v in p])


# Class mix of the UCI training split (class 1 dominates at ~80%).
_SHUTTLE_CLASS_WEIGHTS = np.array([0.784, 0.001, 0.003, 0.155, 0.0565, 0.0002, 0.0003])


def make_shuttle_like_file(path: str, rows: int = 20000, seed: int = 0) -> str:
    """Write a file in the shuttle wire format for offline runs.

    Nine integer sensor columns plus a class label in 1..7, with the heavy
    class-1 skew of the real data.  Class structure is deliberately
    non-linear in the features (threshold and interaction effects), so
    linear models cannot fully separate it.
    """
    rng = np.random.default_rng(seed)
    labels = rng.choice(7, size=rows, p=_SHUTTLE_CLASS_WEIGHTS / _SHUTTLE_CLASS_WEIGHTS.sum())
    # Latent drivers a, b are bimodal (+/-2); the two dominant classes differ
    # only in whether the signs of a and b agree.  That parity is invisible
    # to any linear read of the sensors, while the minor classes sit on a
    # third driver c that is easy to read off.
    signs = rng.integers(0, 2, size=(rows, 2)) * 2.0 - 1.0
    agree = signs[:, 0] == signs[:, 1]
    flip = np.isin(labels, (0, 4)) != agree     # classes 1 and 5 need agreement
    signs[flip, 1] *= -1.0
    a = 2.0 * signs[:, 0] + 0.5 * rng.normal(size=rows)
    b = 2.0 * signs[:, 1] + 0.5 * rng.normal(size=rows)
    c_levels = np.array([0.0, -3.0, 6.0, 0.0, 3.0, -6.0, 9.0])
    c = c_levels[labels] + 0.5 * rng.normal(size=rows)
    X = np.empty((rows, 9))
    X[:, 0] = 40 + 8 * a
    X[:, 1] = 50 + 6 * b
    X[:, 2] = 80 + 5 * c
    X[:, 3] = 30 + 4 * np.abs(a)                 # sign-blind, near-constant
    X[:, 4] = 25 + 3 * np.tanh(c) * a / 2.0
    X[:, 5] = 60 + 5 * (a * a - b * b) / 4.0     # even in both drivers
    X[:, 6] = 45 + 7 * b
    X[:, 7] = 35 + 5 * np.maximum(c, 0.0)
    X[:, 8] = 55 + 5 * np.minimum(c, 0.0)
    X += rng.normal(0.0, 0.5, size=X.shape)
    Xi = np.rint(X).astype(int)
    with open(path, "w") as fh:
        for row, label in zip(Xi, labels):
            fh.write(" ".join(str(v) for v in row) + f" {label + 1}\n")
    return str(path)
