"""Minimal numpy MLP with hand-written backprop, plus Adam and grad clipping.

Parameters are flat lists [W1, b1, W2, b2, ...]; hidden activations are tanh
and the output layer is linear.  Everything is float64 and deterministic
given the init rng.
"""
from __future__ import annotations

import numpy as np


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix QR sign ambiguity
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(gain * q[:rows, :cols])


def mlp_init(rng: np.random.Generator, sizes: list[int], out_gain: float = 1.0) -> list[np.ndarray]:
    """Layers sized [in, h1, ..., out]; orthogonal hidden weights, zero biases."""
    params: list[np.ndarray] = []
    for i in range(len(sizes) - 1):
        last = i == len(sizes) - 2
        gain = out_gain if last else np.sqrt(2.0)
        params.append(orthogonal(rng, sizes[i], sizes[i + 1], gain))
        params.append(np.zeros(sizes[i + 1]))
    return params


def mlp_forward(params: list[np.ndarray], x: np.ndarray):
    """Returns (out, cache); cache holds the input and hidden activations."""
    acts = [x]
    h = x
    n_layers = len(params) // 2
    for i in range(n_layers - 1):
        h = np.tanh(h @ params[2 * i] + params[2 * i + 1])
        acts.append(h)
    out = h @ params[-2] + params[-1]
    return out, acts


def mlp_backward(params: list[np.ndarray], acts: list[np.ndarray], dout: np.ndarray) -> list[np.ndarray]:
    """Gradients of a scalar loss given d loss / d out, same layout as params."""
    grads: list[np.ndarray] = [None] * len(params)
    delta = dout
    n_layers = len(params) // 2
    for i in range(n_layers - 1, -1, -1):
        a_prev = acts[i]
        grads[2 * i] = a_prev.T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params[2 * i].T) * (1.0 - a_prev**2)
    return grads


def zeros_like_params(params: list[np.ndarray]) -> list[np.ndarray]:
    return [np.zeros_like(p) for p in params]


def add_grads(acc: list[np.ndarray], extra: list[np.ndarray]) -> None:
    for a, e in zip(acc, extra):
        a += e


def global_norm(grads: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scales grads in place so their global norm is at most max_norm."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads:
            g *= scale
    return norm


class Adam:
    """First-order adaptive optimizer with bias-corrected moments."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = zeros_like_params(params)
        self.v = zeros_like_params(params)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
