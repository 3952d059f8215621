"""Minimal dense neural-network substrate: GRU layers, linear heads, AdamW.

Everything is plain numpy with explicit backward passes. Sequences are
batch-first ``(batch, time, features)``. The GRU uses the original
formulation with the reset gate applied to the hidden state before the
candidate projection:

    z = sigmoid(x W_z + h U_z + b_z)
    r = sigmoid(x W_r + h U_r + b_r)
    n = tanh(x W_n + (r * h) U_n + b_n)
    h' = (1 - z) * n + z * h

Gate weights are fused column-wise ([z | r | n]) so a whole sequence needs
one input-side matmul.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class Param:
    """A named tensor with a gradient buffer of the same shape."""

    __slots__ = ("name", "values", "grad")

    def __init__(self, name: str, values: np.ndarray):
        self.name = name
        self.values = values
        self.grad = np.zeros_like(values)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Param({self.name}, shape={self.values.shape})"


def _uniform(rng, shape, bound, dtype):
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("softmax of an empty vector")
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def linear(x: np.ndarray, w: Param, b: Param) -> np.ndarray:
    return x @ w.values + b.values


class Linear:
    """Dense affine layer: y = x W + b, with W of shape (in, out)."""

    def __init__(self, input_dim, output_dim, rng, dtype=np.float64, name="linear"):
        bound = 1.0 / math.sqrt(input_dim)
        self.w = Param(f"{name}.w", _uniform(rng, (input_dim, output_dim), bound, dtype))
        self.b = Param(f"{name}.b", _uniform(rng, (output_dim,), bound, dtype))

    def params(self):
        return [self.w, self.b]

    def forward(self, x):
        return x @ self.w.values + self.b.values

    def backward(self, x, dy):
        flat_x = x.reshape(-1, x.shape[-1])
        flat_dy = dy.reshape(-1, dy.shape[-1])
        self.w.grad += flat_x.T @ flat_dy
        self.b.grad += flat_dy.sum(axis=0)
        return dy @ self.w.values.T


class GruLayer:
    """One GRU layer over batch-first sequences with explicit BPTT."""

    def __init__(self, input_dim, hidden_dim, rng, dtype=np.float64, name="gru"):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        bound = 1.0 / math.sqrt(hidden_dim)
        h = hidden_dim
        self.w = Param(f"{name}.w", _uniform(rng, (input_dim, 3 * h), bound, dtype))
        self.u_zr = Param(f"{name}.u_zr", _uniform(rng, (h, 2 * h), bound, dtype))
        self.u_n = Param(f"{name}.u_n", _uniform(rng, (h, h), bound, dtype))
        self.b = Param(f"{name}.b", _uniform(rng, (3 * h,), bound, dtype))

    def params(self):
        return [self.w, self.u_zr, self.u_n, self.b]

    def step(self, x, h_prev, gx=None):
        """Single time step; ``gx`` optionally carries x W + b precomputed."""
        h = self.hidden_dim
        if gx is None:
            gx = x @ self.w.values + self.b.values
        zr = sigmoid(gx[..., : 2 * h] + h_prev @ self.u_zr.values)
        zg, rg = zr[..., :h], zr[..., h:]
        hr = rg * h_prev
        ng = np.tanh(gx[..., 2 * h :] + hr @ self.u_n.values)
        return ng + zg * (h_prev - ng), (h_prev, zg, rg, ng, hr)

    def forward_seq(self, x_seq, h0):
        """Run the layer over a whole (B, T, input_dim) sequence.

        Returns the (B, T, hidden) outputs and a cache for backward_seq.
        """
        b_sz, t_len, _ = x_seq.shape
        h = self.hidden_dim
        gx = (x_seq.reshape(-1, self.input_dim) @ self.w.values + self.b.values).reshape(
            b_sz, t_len, 3 * h
        )
        h_out = np.empty((b_sz, t_len, h), dtype=x_seq.dtype)
        steps = []
        h_t = h0
        for t in range(t_len):
            h_t, cache = self.step(None, h_t, gx=gx[:, t])
            steps.append(cache)
            h_out[:, t] = h_t
        return h_out, (x_seq, steps)

    def backward_seq(self, cache, d_out, dh_last=None):
        """BPTT given per-step output grads (B, T, hidden).

        ``dh_last`` adds an extra gradient on the final hidden state. Returns
        (d_inputs, dh0) and accumulates parameter gradients.
        """
        x_seq, steps = cache
        b_sz, t_len, _ = x_seq.shape
        h = self.hidden_dim
        d_gx = np.empty((b_sz, t_len, 3 * h), dtype=x_seq.dtype)
        hr_stack = np.empty((b_sz, t_len, h), dtype=x_seq.dtype)
        hprev_stack = np.empty((b_sz, t_len, h), dtype=x_seq.dtype)
        dh = np.zeros((b_sz, h), dtype=x_seq.dtype) if dh_last is None else dh_last.copy()
        u_zr = self.u_zr.values
        u_n = self.u_n.values
        for t in range(t_len - 1, -1, -1):
            h_prev, zg, rg, ng, hr = steps[t]
            hr_stack[:, t] = hr
            hprev_stack[:, t] = h_prev
            dh_total = d_out[:, t] + dh
            dn = dh_total * (1.0 - zg)
            dz = dh_total * (h_prev - ng)
            dh = dh_total * zg
            dan = dn * (1.0 - ng * ng)
            d_gx[:, t, 2 * h :] = dan
            dhr = dan @ u_n.T
            dh += dhr * rg
            dr = dhr * h_prev
            d_gx[:, t, :h] = dz * zg * (1.0 - zg)
            d_gx[:, t, h : 2 * h] = dr * rg * (1.0 - rg)
            dh += d_gx[:, t, : 2 * h] @ u_zr.T
        flat_dgx = d_gx.reshape(-1, 3 * h)
        flat_x = x_seq.reshape(-1, self.input_dim)
        self.w.grad += flat_x.T @ flat_dgx
        self.b.grad += flat_dgx.sum(axis=0)
        self.u_zr.grad += hprev_stack.reshape(-1, h).T @ flat_dgx[:, : 2 * h]
        self.u_n.grad += hr_stack.reshape(-1, h).T @ flat_dgx[:, 2 * h :]
        d_inputs = (flat_dgx @ self.w.values.T).reshape(x_seq.shape)
        return d_inputs, dh


def gru_step(layer: GruLayer, x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """Single GRU update for a vector (or batch) input."""
    if x.shape[-1] != layer.input_dim or h_prev.shape[-1] != layer.hidden_dim:
        raise ValueError("input/hidden dims do not match the cell")
    h_new, _ = layer.step(x, h_prev)
    return h_new


class GruStack:
    """Stacked GRU layers; layer k feeds its full output sequence to k+1."""

    def __init__(self, input_dim, hidden_dim, n_layers, rng, dtype=np.float64, name="stack"):
        self.layers = [
            GruLayer(
                input_dim if k == 0 else hidden_dim,
                hidden_dim,
                rng,
                dtype=dtype,
                name=f"{name}.{k}",
            )
            for k in range(n_layers)
        ]
        self.hidden_dim = hidden_dim

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def forward_seq(self, x_seq, h0_layers):
        caches = []
        out = x_seq
        outputs = []
        for layer, h0 in zip(self.layers, h0_layers):
            out, cache = layer.forward_seq(out, h0)
            caches.append(cache)
            outputs.append(out)
        return outputs, caches

    def backward_seq(self, caches, d_top, dh_last_layers=None):
        """Backward through the stack.

        ``d_top`` holds per-step grads on the top layer's outputs;
        ``dh_last_layers`` optionally adds final-state grads per layer.
        Returns (d_inputs, [dh0 per layer]).
        """
        dh0s = [None] * len(self.layers)
        d_seq = d_top
        for k in range(len(self.layers) - 1, -1, -1):
            extra = None if dh_last_layers is None else dh_last_layers[k]
            d_seq, dh0s[k] = self.layers[k].backward_seq(caches[k], d_seq, dh_last=extra)
        return d_seq, dh0s

    def step(self, x, h_prev_layers):
        """One autoregressive step through all layers; returns new states."""
        states = []
        inp = x
        for layer, h_prev in zip(self.layers, h_prev_layers):
            inp, _ = layer.step(inp, h_prev)
            states.append(inp)
        return states


class AdamW:
    """Adam with decoupled weight decay; lr=0 leaves parameters untouched."""

    def __init__(self, params: Sequence[Param], lr, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.01):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.values
            p.values -= self.lr * update


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    n_checked: int
    entries: list = field(default_factory=list)


def grad_check(loss_fn: Callable[[], float], params: Sequence[Param], step: float = 1e-5,
               max_entries_per_param: Optional[int] = None,
               rng: Optional[np.random.Generator] = None) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` must run a full forward/backward pass, accumulating gradients
    into the given params, and return the scalar loss. It has to be
    deterministic and differentiable (no stochastic thresholding inside).
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    base = loss_fn()
    if not np.isfinite(base):
        raise ValueError(f"non-finite loss {base}")
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    worst_param = ""
    n_checked = 0
    entries = []
    for p, a in zip(params, analytic):
        flat = p.values.reshape(-1)
        idxs = np.arange(flat.size)
        if max_entries_per_param is not None and flat.size > max_entries_per_param:
            gen = rng if rng is not None else np.random.default_rng(0)
            idxs = gen.choice(flat.size, size=max_entries_per_param, replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + step
            for q in params:
                q.zero_grad()
            lp = loss_fn()
            flat[i] = orig - step
            for q in params:
                q.zero_grad()
            lm = loss_fn()
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * step)
            ana = a.reshape(-1)[i]
            denom = max(abs(ana) + abs(numeric), 1e-8)
            rel = abs(ana - numeric) / denom
            n_checked += 1
            if rel > worst:
                worst = rel
                worst_param = f"{p.name}[{i}]"
            entries.append((p.name, int(i), float(ana), float(numeric), float(rel)))
    # leave the analytic gradients in place for callers that inspect them
    for p, a in zip(params, analytic):
        p.grad[...] = a
    return GradCheckReport(max_rel_error=worst, worst_param=worst_param,
                           n_checked=n_checked, entries=entries)
