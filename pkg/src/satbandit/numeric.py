"""Dense numeric kernels: linear solves, softmax, and a bias-free MLP with Adam.

Everything operates on plain numpy arrays.  The MLP has no bias terms
anywhere: the forward pass is W1 x -> ReLU -> ... -> WL, with a sqrt(width)
scaling applied to the final pre-activation.  Gradients are computed by
hand-rolled backprop; ``gradient_check`` verifies them against central
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


def solve_linear_system(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A via Cholesky.

    Raises ValueError on non-square / mismatched / non-SPD input.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b is {b.shape}")
    if not np.allclose(A, A.T, rtol=1e-8, atol=1e-10):
        raise ValueError("matrix is not symmetric")
    try:
        factor = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc
    return cho_solve(factor, b)


def softmax(v: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtraction)."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("softmax of empty vector")
    e = np.exp(v - v.max())
    return e / e.sum()


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass
class MlpParams:
    """Weights of a bias-free fully connected network.

    ``layers[0]`` is (width x d), intermediate layers are (width x width),
    ``layers[-1]`` is (num_actions x width).  ``depth`` counts weight
    matrices, so depth=2 means one hidden layer.
    """

    layers: list[np.ndarray]
    width: int
    num_actions: int

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].shape[1]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.layers], self.width, self.num_actions)


def mlp_init(input_dim: int, num_actions: int, width: int, depth: int,
             rng: np.random.Generator, init_scale: float = 1.0) -> MlpParams:
    """He-style Gaussian init, std init_scale * sqrt(2 / fan_in) per layer.

    ``init_scale`` < 1 starts the network close to the zero function, which
    keeps early value estimates pessimistic instead of random.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2 (input layer + output layer)")
    if init_scale <= 0:
        raise ValueError("init_scale must be positive")
    dims = [input_dim] + [width] * (depth - 1)
    layers = []
    for l in range(depth):
        fan_in = dims[l]
        fan_out = width if l < depth - 1 else num_actions
        layers.append(rng.normal(0.0, init_scale * np.sqrt(2.0 / fan_in),
                                 size=(fan_out, fan_in)))
    return MlpParams(layers, width, num_actions)


def mlp_forward(x: np.ndarray, params: MlpParams) -> tuple[np.ndarray, np.ndarray]:
    """Forward pass for a single context.

    Returns (outputs, latent) where outputs has length num_actions (already
    scaled by sqrt(width)) and latent is the penultimate-layer ReLU
    activation (length width).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ValueError(f"expected input of shape ({params.input_dim},), got {x.shape}")
    f = params.layers[0] @ x
    h = x  # previous activation, only used past layer 0
    for W in params.layers[1:]:
        h = relu(f)
        f = W @ h
    return np.sqrt(params.width) * f, h


def _forward_batch(X: np.ndarray, params: MlpParams):
    """Batched forward; returns (outputs B x K, pre-activations per layer, activations per layer)."""
    preacts = []
    acts = [X]
    F = X @ params.layers[0].T
    preacts.append(F)
    for W in params.layers[1:]:
        H = relu(F)
        acts.append(H)
        F = H @ W.T
        preacts.append(F)
    return np.sqrt(params.width) * F, preacts, acts


def _backward_batch(params: MlpParams, preacts, acts, dOut: np.ndarray) -> list[np.ndarray]:
    """Backprop given d(loss)/d(outputs); returns per-layer weight gradients."""
    dF = np.sqrt(params.width) * dOut
    grads = [None] * params.depth
    for l in range(params.depth - 1, 0, -1):
        grads[l] = dF.T @ acts[l]
        dH = dF @ params.layers[l]
        dF = dH * (preacts[l - 1] > 0)
    grads[0] = dF.T @ acts[0]
    return grads


def mlp_loss_and_grads(params: MlpParams, X: np.ndarray, actions: np.ndarray,
                       rewards: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Half-sum-of-squares loss on the chosen-action outputs, with gradients.

    loss = 1/2 sum_b (f_{a_b}(x_b) - r_b)^2; gradients flow only through
    each sample's recorded action output.
    """
    out, preacts, acts = _forward_batch(X, params)
    idx = np.arange(len(actions))
    resid = out[idx, actions] - rewards
    loss = 0.5 * float(resid @ resid)
    dOut = np.zeros_like(out)
    dOut[idx, actions] = resid
    return loss, _backward_batch(params, preacts, acts, dOut)


@dataclass
class AdamState:
    """Per-layer first/second moment accumulators for Adam."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams, learning_rate: float = 1e-3) -> "AdamState":
        return cls(m=[np.zeros_like(w) for w in params.layers],
                   v=[np.zeros_like(w) for w in params.layers],
                   learning_rate=learning_rate)


def adam_step(params: MlpParams, adam: AdamState, grads: list[np.ndarray]) -> None:
    """One in-place Adam update."""
    adam.step_count += 1
    t = adam.step_count
    b1, b2 = adam.beta1, adam.beta2
    lr_t = adam.learning_rate * np.sqrt(1.0 - b2 ** t) / (1.0 - b1 ** t)
    for W, m, v, g in zip(params.layers, adam.m, adam.v, grads):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        W -= lr_t * m / (np.sqrt(v) + adam.epsilon)


def mlp_train_step(params: MlpParams, adam: AdamState, X: np.ndarray,
                   actions: np.ndarray, rewards: np.ndarray) -> float:
    """One Adam step on the batch; mutates params and adam, returns the loss."""
    if len(X) == 0:
        raise ValueError("empty batch")
    loss, grads = mlp_loss_and_grads(params, X, np.asarray(actions), np.asarray(rewards, dtype=float))
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss}")
    adam_step(params, adam, grads)
    return loss


class TrainingDiverged(RuntimeError):
    """Raised when the network loss becomes non-finite."""


def output_gradients(x: np.ndarray, params: MlpParams) -> np.ndarray:
    """Gradient of each output unit w.r.t. all weights, flattened.

    Returns an array of shape (num_actions, total_weights); row i is
    d f_i(x) / d theta.  Used for diagonal confidence bonuses.
    """
    X = np.asarray(x, dtype=float)[None, :]
    _, preacts, acts = _forward_batch(X, params)
    rows = []
    for i in range(params.num_actions):
        dOut = np.zeros((1, params.num_actions))
        dOut[0, i] = 1.0
        grads = _backward_batch(params, preacts, acts, dOut)
        rows.append(np.concatenate([g.ravel() for g in grads]))
    return np.array(rows)


def num_weights(params: MlpParams) -> int:
    return sum(w.size for w in params.layers)


def gradient_check(params: MlpParams, X: np.ndarray, actions: np.ndarray,
                   rewards: np.ndarray, step: float = 1e-5, max_weights: int = 200,
                   rng: np.random.Generator | None = None,
                   analytic: list[np.ndarray] | None = None) -> float:
    """Max relative error between analytic and central-finite-difference gradients.

    Checks every weight, or a random sample of ``max_weights`` for large
    nets.  ``analytic`` overrides the computed gradient (negative-control
    hook for tests).
    """
    X = np.asarray(X, dtype=float)
    actions = np.asarray(actions)
    rewards = np.asarray(rewards, dtype=float)
    if analytic is None:
        _, analytic = mlp_loss_and_grads(params, X, actions, rewards)

    total = num_weights(params)
    if total <= max_weights:
        coords = [(l, i) for l, W in enumerate(params.layers) for i in range(W.size)]
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        coords = []
        flat_idx = rng.choice(total, size=max_weights, replace=False)
        offsets = np.cumsum([0] + [w.size for w in params.layers])
        for fi in flat_idx:
            l = int(np.searchsorted(offsets, fi, side="right") - 1)
            coords.append((l, int(fi - offsets[l])))

    def loss_at() -> float:
        out, _, _ = _forward_batch(X, params)
        resid = out[np.arange(len(actions)), actions] - rewards
        return 0.5 * float(resid @ resid)

    max_err = 0.0
    for l, i in coords:
        W = params.layers[l].ravel()
        orig = W[i]
        W[i] = orig + step
        lp = loss_at()
        W[i] = orig - step
        lm = loss_at()
        W[i] = orig
        gn = (lp - lm) / (2 * step)
        ga = analytic[l].ravel()[i]
        diff = abs(ga - gn)
        if diff < 1e-10:
            continue
        max_err = max(max_err, diff / max(abs(ga), abs(gn), 1e-8))
    return max_err
