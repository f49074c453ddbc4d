"""Minimal feed-forward network stack: forward, exact backprop, Adam, LR schedule.

The architecture family is fixed by the experiments (four hidden layers of
width 200 with LeakyReLU slope 0.1; identity head for the generator,
sigmoid head for the discriminator), but the implementation is a generic
dense MLP.  backward returns input gradients as well as parameter
gradients, which is how discriminator feedback reaches the generator.

The LeakyReLU activation and the Adam inner loop are fused with numba when
it is available (a single memory pass instead of several full-array ufunc
passes, which dominates the single-core training budget); the numpy
fallbacks compute the identical update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a hard dep in practice
    _njit = None

LEAKY_SLOPE = 0.1

IDENTITY = "identity"
LEAKY_RELU = "leaky_relu"
SIGMOID = "sigmoid"
_ACTIVATIONS = (IDENTITY, LEAKY_RELU, SIGMOID)

HIDDEN_WIDTH = 200
N_HIDDEN = 4


def _stable_sigmoid(pre: np.ndarray) -> np.ndarray:
    # exp(min(x,0)) / (1 + exp(-|x|)), clipped strictly inside (0, 1).
    e = np.exp(-np.abs(pre))
    num = np.exp(np.minimum(pre, 0.0))
    out = num / (1.0 + e)
    finfo = np.finfo(pre.dtype)
    return np.clip(out, finfo.tiny, 1.0 - finfo.epsneg)


def _leaky_apply_numpy(pre: np.ndarray, factor: np.ndarray | None) -> None:
    mask = pre > 0
    scaled = pre * LEAKY_SLOPE
    np.copyto(pre, scaled, where=~mask)
    if factor is not None:
        f = mask.astype(pre.dtype)
        f *= 1.0 - LEAKY_SLOPE
        f += LEAKY_SLOPE
        factor[...] = f


def _adam_step_numpy(p, g, m, v, b1, b2, c1, c2, lr, eps) -> None:
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


if _njit is not None:
    @_njit(cache=True)
    def _leaky_kernel_factor(x, f):  # pragma: no cover - executes compiled
        for i in range(x.size):
            if x[i] > 0:
                f[i] = 1.0
            else:
                f[i] = LEAKY_SLOPE
                x[i] *= LEAKY_SLOPE

    @_njit(cache=True)
    def _leaky_kernel(x):  # pragma: no cover - executes compiled
        for i in range(x.size):
            if x[i] <= 0:
                x[i] *= LEAKY_SLOPE

    @_njit(cache=True)
    def _adam_kernel(p, g, m, v, b1, b2, c1, c2, lr, eps):  # pragma: no cover
        for i in range(p.size):
            m[i] = b1 * m[i] + (1.0 - b1) * g[i]
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i]
            p[i] -= lr * (m[i] / c1) / (math.sqrt(v[i] / c2) + eps)


def _leaky_apply(pre: np.ndarray, factor: np.ndarray | None) -> None:
    """In-place LeakyReLU on pre; optionally fill the derivative factor."""
    if _njit is not None and pre.flags.c_contiguous:
        if factor is None:
            _leaky_kernel(pre.ravel())
        else:
            _leaky_kernel_factor(pre.ravel(), factor.ravel())
        return
    _leaky_apply_numpy(pre, factor)


class MLP:
    """Dense network: alternating affine maps and activations.

    weights[i] has shape (in_i, out_i); consecutive dims chain.  Immutable
    once training stops; training code mutates the parameter arrays in
    place through the optimizer.
    """

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray],
                 activations: tuple[str, ...]):
        if not (len(weights) == len(biases) == len(activations)):
            raise ValueError("layer lists must have equal length")
        for tag in activations:
            if tag not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {tag!r}")
        for i in range(len(weights) - 1):
            if weights[i].shape[1] != weights[i + 1].shape[0]:
                raise ValueError("consecutive layer dims do not chain")
        for w, b in zip(weights, biases):
            if b.shape != (w.shape[1],):
                raise ValueError("bias shape does not match weight columns")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("parameters must be finite")
        self.weights = weights
        self.biases = biases
        self.activations = tuple(activations)

    @classmethod
    def create(cls, in_dim: int, out_dim: int, out_activation: str,
               rng: np.random.Generator, hidden: tuple[int, ...] | None = None,
               dtype=np.float64) -> "MLP":
        """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
        hidden = tuple(hidden) if hidden is not None else (HIDDEN_WIDTH,) * N_HIDDEN
        dims = (in_dim, *hidden, out_dim)
        weights, biases, acts = [], [], []
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(dtype))
            biases.append(np.zeros(fan_out, dtype=dtype))
            acts.append(LEAKY_RELU if i < len(dims) - 2 else out_activation)
        return cls(weights, biases, tuple(acts))

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def dtype(self):
        return self.weights[0].dtype

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MLP":
        return MLP([w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.activations)

    def forward(self, batch: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(batch, keep_cache=False)
        return out

    def forward_cached(self, batch: np.ndarray, keep_cache: bool = True,
                       head_preact: bool = False):
        """Run the network; optionally keep per-layer inputs and grad factors.

        With head_preact=True the final activation is skipped and the raw
        pre-activation (the logit, for a sigmoid head) is returned; pair it
        with backward(..., from_preact=True).
        """
        x = np.asarray(batch, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"batch must be (rows, {self.in_dim}), got {x.shape}")
        inputs, factors = [], []
        last = len(self.weights) - 1
        for i, (w, b, tag) in enumerate(zip(self.weights, self.biases,
                                            self.activations)):
            pre = x @ w
            pre += b
            if keep_cache:
                inputs.append(x)
            skip_head = head_preact and i == last
            if tag == LEAKY_RELU and not skip_head:
                factor = np.empty_like(pre) if keep_cache else None
                _leaky_apply(pre, factor)
                x = pre
                factors.append(factor)
            elif tag == SIGMOID and not skip_head:
                x = _stable_sigmoid(pre)
                factors.append(x if keep_cache else None)
            else:
                x = pre
                factors.append(None)
        cache = (inputs, factors) if keep_cache else None
        return x, cache

    @staticmethod
    def _scale_delta(tag: str, factor, delta: np.ndarray) -> np.ndarray:
        if tag == LEAKY_RELU:
            delta *= factor
        elif tag == SIGMOID:
            delta = delta * factor
            delta *= 1.0 - factor
        return delta

    def backward(self, cache, grad_output: np.ndarray, from_preact: bool = False,
                 want_param_grads: bool = True, want_input_grad: bool = False):
        """Exact reverse-mode gradients from a forward_cached pass.

        grad_output is d(loss)/d(output); with from_preact=True it is taken
        as d(loss)/d(final pre-activation) instead, matching a
        forward_cached(head_preact=True) pass (this is how loss code folds
        the sigmoid head into a numerically stable fused form).  Returns
        (param_grads, input_grad); param_grads is a flat
        [dW0, db0, dW1, db1, ...] list aligned with params().
        """
        inputs, factors = cache
        if len(inputs) != len(self.weights):
            raise ValueError("cache does not match network depth")
        delta = np.asarray(grad_output, dtype=self.dtype)
        if delta.shape != (inputs[-1].shape[0], self.weights[-1].shape[1]):
            raise ValueError("grad_output shape mismatch")
        if not from_preact:
            delta = self._scale_delta(self.activations[-1], factors[-1],
                                      delta.copy())
        param_grads = [None] * (2 * len(self.weights)) if want_param_grads else None
        for i in range(len(self.weights) - 1, -1, -1):
            if want_param_grads:
                param_grads[2 * i] = inputs[i].T @ delta
                param_grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i].T
                delta = self._scale_delta(self.activations[i - 1], factors[i - 1],
                                          delta)
            elif want_input_grad:
                delta = delta @ self.weights[0].T
        input_grad = delta if want_input_grad else None
        return param_grads, input_grad


@dataclass
class AdamState:
    """First/second moment accumulators and step counter for Adam."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float,
                   beta1: float = 0.5, beta2: float = 0.999) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   lr=lr, beta1=beta1, beta2=beta2)


def adam_update(params: list[np.ndarray], grads: list[np.ndarray],
                state: AdamState, lr: float | None = None):
    """One bias-corrected Adam step, applied to params in place."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("params/grads/state lengths do not match")
    step_lr = state.lr if lr is None else lr
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if _njit is not None and p.flags.c_contiguous and g.flags.c_contiguous:
            _adam_kernel(p.ravel(), g.ravel(), m.ravel(), v.ravel(),
                         b1, b2, c1, c2, step_lr, state.eps)
        else:
            _adam_step_numpy(p, g, m, v, b1, b2, c1, c2, step_lr, state.eps)
    return params, state


@dataclass(frozen=True)
class LrSchedule:
    """Step decay: base_lr / decay_factor^(iteration // interval)."""

    base_lr: float
    decay_factor: float = 1.05
    interval: int = 500

    def __post_init__(self):
        if self.decay_factor <= 1.0:
            raise ValueError("decay_factor must exceed 1")
        if self.interval < 1:
            raise ValueError("interval must be at least 1")


def lr_at(schedule: LrSchedule, iteration: int) -> float:
    """Learning rate in effect at a (0-based) global iteration count."""
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    return schedule.base_lr / schedule.decay_factor ** (iteration // schedule.interval)
