"""Minimal differentiable MLP: ReLU hidden layers, softmax cross-entropy,
momentum SGD with cosine-annealed learning rate, finite-difference checking.

Gradients are represented as lists of (dW, db) pairs, one per layer, shaped
like the model parameters.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, NumericalFailureError

PROB_FLOOR = 1e-12


@dataclass
class MlpModel:
    layer_dims: list
    weights: list = field(repr=False)
    biases: list = field(repr=False)

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def num_classes(self):
        return self.layer_dims[-1]

    def copy(self):
        return MlpModel(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class OptimizerState:
    learning_rate: float
    momentum: float
    velocities: list = field(repr=False)
    step_count: int = 0


@dataclass
class ForwardResult:
    probabilities: np.ndarray
    per_sample_loss: np.ndarray  # None when labels were not supplied
    predicted_labels: np.ndarray


def mlp_init(layer_dims, seed):
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    if len(layer_dims) < 2:
        raise ConfigurationError("need at least input and output dims")
    if any(int(d) <= 0 for d in layer_dims):
        raise ConfigurationError(f"all layer dims must be positive: {layer_dims}")
    dims = [int(d) for d in layer_dims]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(dims, weights, biases)


def sgd_init(model, learning_rate, momentum=0.9):
    if learning_rate <= 0:
        raise ConfigurationError("learning rate must be positive")
    if not 0.0 <= momentum < 1.0:
        raise ConfigurationError("momentum must be in [0, 1)")
    vel = [(np.zeros_like(w), np.zeros_like(b))
           for w, b in zip(model.weights, model.biases)]
    return OptimizerState(learning_rate, momentum, vel)


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cache(model, X):
    """Returns (list of post-activation values per layer incl. input, probs)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimensionError(
            f"expected input of shape (n, {model.input_dim}), got {X.shape}")
    acts = [X]
    h = X
    n_layers = len(model.weights)
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
        else:
            h = z
        acts.append(h)
    return acts, _softmax(acts[-1])


def forward(model, X, labels=None):
    """Forward pass; per-sample cross-entropy when labels are given.

    Predicted labels break argmax ties toward the lowest class index.
    """
    _, probs = _forward_cache(model, X)
    loss = None
    if labels is not None:
        labels = np.asarray(labels, dtype=int)
        if labels.shape != (probs.shape[0],):
            raise DimensionError(
                f"labels shape {labels.shape} does not match batch {probs.shape[0]}")
        if labels.size and (labels.min() < 0 or labels.max() >= model.num_classes):
            raise DimensionError("label out of range")
        picked = probs[np.arange(probs.shape[0]), labels]
        loss = -np.log(np.maximum(picked, PROB_FLOOR))
    preds = np.argmax(probs, axis=1)
    return ForwardResult(probs, loss, preds)


def _backprop(model, acts, dlogits):
    """Backpropagate a gradient w.r.t. the output logits into parameter grads."""
    grads = [None] * len(model.weights)
    delta = dlogits
    for i in range(len(model.weights) - 1, -1, -1):
        dW = acts[i].T @ delta
        db = delta.sum(axis=0)
        grads[i] = (dW, db)
        if i > 0:
            delta = delta @ model.weights[i].T
            delta = delta * (acts[i] > 0)
    return grads


def loss_gradients(model, X, labels, sample_weights=None):
    """Gradients of (1/|B|) sum_i w_i * CE_i; returns (grads, mean weighted loss)."""
    acts, probs = _forward_cache(model, X)
    n = probs.shape[0]
    if n == 0:
        raise DimensionError("empty batch")
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (n,):
        raise DimensionError("labels shape mismatch")
    if sample_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(sample_weights, dtype=float)
        if w.shape != (n,):
            raise DimensionError("sample_weights shape mismatch")
        if (w < 0).any():
            raise ConfigurationError("sample weights must be nonnegative")
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), labels] = 1.0
    dlogits = (probs - onehot) * (w[:, None] / n)
    grads = _backprop(model, acts, dlogits)
    picked = probs[np.arange(n), labels]
    mean_loss = float(np.sum(w * -np.log(np.maximum(picked, PROB_FLOOR))) / n)
    return grads, mean_loss


def output_gradients(model, X, dprobs):
    """Parameter gradients for an arbitrary objective given dL/dprobabilities."""
    acts, probs = _forward_cache(model, X)
    dprobs = np.asarray(dprobs, dtype=float)
    if dprobs.shape != probs.shape:
        raise DimensionError("dprobs shape mismatch")
    # softmax Jacobian: dlogits = p * (dp - <dp, p>)
    inner = np.sum(dprobs * probs, axis=1, keepdims=True)
    dlogits = probs * (dprobs - inner)
    return _backprop(model, acts, dlogits)


def zero_grads(model):
    return [(np.zeros_like(w), np.zeros_like(b))
            for w, b in zip(model.weights, model.biases)]


def add_grads(a, b, scale=1.0):
    return [(ga_w + scale * gb_w, ga_b + scale * gb_b)
            for (ga_w, ga_b), (gb_w, gb_b) in zip(a, b)]


def apply_update(model, opt, grads):
    """Momentum SGD step: v <- mu*v + g; p <- p - lr*v. Mutates model and opt."""
    for i, (gW, gb) in enumerate(grads):
        if not (np.isfinite(gW).all() and np.isfinite(gb).all()):
            raise NumericalFailureError(
                f"non-finite gradient in layer {i}", layer_index=i)
        vW, vb = opt.velocities[i]
        vW *= opt.momentum
        vW += gW
        vb *= opt.momentum
        vb += gb
        model.weights[i] -= opt.learning_rate * vW
        model.biases[i] -= opt.learning_rate * vb
    opt.step_count += 1


def backward_and_step(model, opt, X, labels, sample_weights=None, extra_grad=None):
    """One momentum-SGD step on the mean weighted cross-entropy (+ extra_grad).

    extra_grad, when given, is a parameter-shaped gradient addend (used by the
    trainer for the consistency term). Returns the mean weighted loss.
    """
    grads, mean_loss = loss_gradients(model, X, labels, sample_weights)
    if extra_grad is not None:
        grads = add_grads(grads, extra_grad)
    apply_update(model, opt, grads)
    return mean_loss


def cosine_lr(epoch, total_epochs, lr0):
    """0.5 * lr0 * (1 + cos(pi * epoch / total_epochs))."""
    if lr0 <= 0:
        raise ConfigurationError("lr0 must be positive")
    if not 0 <= epoch <= total_epochs:
        raise ConfigurationError(f"epoch {epoch} outside [0, {total_epochs}]")
    return 0.5 * lr0 * (1.0 + math.cos(math.pi * epoch / total_epochs))


def _flat_params(model):
    return np.concatenate([w.ravel() for w in model.weights]
                          + [b.ravel() for b in model.biases])


def _param_slots(model):
    """Yields (array, flat_index) addressing every scalar parameter."""
    for arr in model.weights + model.biases:
        for j in range(arr.size):
            yield arr, j


def gradient_check(model, X, labels, sample_weights=None, num_checks=60,
                   h=1e-5, seed=0):
    """Max relative error between analytic grads and central finite differences
    over a random subsample of parameters."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] > 64:
        raise ConfigurationError("gradient_check expects a small batch (<= 64)")
    grads, _ = loss_gradients(model, X, labels, sample_weights)
    flat_grads = np.concatenate([g.ravel() for g, _ in grads]
                                + [g.ravel() for _, g in grads])
    arrays = model.weights + model.biases
    sizes = [a.size for a in arrays]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=min(num_checks, total), replace=False)

    def scalar_loss():
        _, loss = loss_gradients(model, X, labels, sample_weights)
        return loss

    offsets = np.cumsum([0] + sizes)
    max_err = 0.0
    for p in picks:
        ai = int(np.searchsorted(offsets, p, side="right") - 1)
        arr = arrays[ai]
        j = p - offsets[ai]
        idx = np.unravel_index(j, arr.shape)
        orig = arr[idx]
        arr[idx] = orig + h
        lp = scalar_loss()
        arr[idx] = orig - h
        lm = scalar_loss()
        arr[idx] = orig
        numeric = (lp - lm) / (2 * h)
        analytic = flat_grads[p]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        max_err = max(max_err, abs(numeric - analytic) / denom)
    return max_err
