"""Dense reverse-mode autodiff over float64 matrices, plus Adam.

Every value is a 2-D array. Operations record their inputs and a closure
that pushes the output gradient back to them; :func:`backward` walks the
recorded graph in reverse topological order. Gradients accumulate across
multiple uses of a node, so call :meth:`Adam.zero_grad` (or
:func:`zero_grad`) between steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, value, requires_grad=False, op="leaf", parents=()):
        value = np.array(value, dtype=np.float64)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        elif value.ndim == 1:
            value = value.reshape(-1, 1)
        elif value.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {value.shape}")
        self.value = value
        self.grad = np.zeros_like(value)
        self.requires_grad = requires_grad
        self.op = op
        self._parents = parents
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(value, op, parents, backward):
    parents = tuple(parents)
    needs = any(p.requires_grad for p in parents)
    out = Tensor(value, requires_grad=needs, op=op, parents=parents if needs else ())
    if needs:
        out._backward = backward
    return out


def _check_index(index, n_rows, name="index"):
    index = np.asarray(index, dtype=np.int64)
    if index.ndim != 1 or index.shape[0] != n_rows:
        raise ShapeError(f"{name} must have one entry per row ({n_rows}), got {index.shape}")
    if index.size and index.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    return index


def _check_sorted(ids):
    if ids.size > 1 and np.any(np.diff(ids) < 0):
        raise ValueError("segment ids must be sorted")


# --------------------------------------------------------------------------
# forward ops


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a.grad += g @ b.value.T
        if b.requires_grad:
            b.grad += a.value.T @ g

    return _result(a.value @ b.value, "matmul", (a, b), backward)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch: {a.shape} + {b.shape}")

    def backward(g):
        if a.requires_grad:
            a.grad += g
        if b.requires_grad:
            b.grad += g

    return _result(a.value + b.value, "add", (a, b), backward)


def add_row_broadcast(a, b) -> Tensor:
    """``a + b`` with the 1 x d row ``b`` added to every row of ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    if b.shape != (1, a.shape[1]):
        raise ShapeError(f"row broadcast needs b of shape (1, {a.shape[1]}), got {b.shape}")

    def backward(g):
        if a.requires_grad:
            a.grad += g
        if b.requires_grad:
            b.grad += g.sum(axis=0, keepdims=True)

    return _result(a.value + b.value, "add_row_broadcast", (a, b), backward)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0

    def backward(g):
        a.grad += g * mask

    return _result(np.where(mask, a.value, 0.0), "relu", (a,), backward)


def leaky_relu(a, slope=0.2) -> Tensor:
    a = as_tensor(a)
    factor = np.where(a.value > 0, 1.0, slope)

    def backward(g):
        a.grad += g * factor

    return _result(a.value * factor, "leaky_relu", (a,), backward)


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols row mismatch: {a.shape} | {b.shape}")
    k = a.shape[1]

    def backward(g):
        if a.requires_grad:
            a.grad += g[:, :k]
        if b.requires_grad:
            b.grad += g[:, k:]

    return _result(np.concatenate([a.value, b.value], axis=1), "concat_cols", (a, b), backward)


def gather_rows(a, index) -> Tensor:
    """Rows ``a[index]``; the gradient scatters back with summation."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    n = a.shape[0]

    def backward(g):
        a.grad += kernels.scatter_add_rows(g, index, n)

    return _result(a.value[index], "gather_rows", (a,), backward)


def scatter_sum(a, index, n_out) -> Tensor:
    """Sum rows of ``a`` into ``n_out`` target rows: ``out[index[k]] += a[k]``."""
    a = as_tensor(a)
    index = _check_index(index, a.shape[0])
    if index.size and index.max() >= n_out:
        raise ValueError(f"index {index.max()} out of range for {n_out} targets")

    def backward(g):
        a.grad += g[index]

    return _result(kernels.scatter_add_rows(a.value, index, n_out), "scatter_sum", (a,), backward)


def segment_mean(a, segment_ids, n_segments=None) -> Tensor:
    a = as_tensor(a)
    ids = _check_index(segment_ids, a.shape[0], "segment_ids")
    _check_sorted(ids)
    if n_segments is None:
        n_segments = int(ids.max()) + 1 if ids.size else 0
    counts = np.bincount(ids, minlength=n_segments).astype(np.float64)
    if np.any(counts == 0):
        raise ValueError("segment_mean over an empty segment")
    inv = (1.0 / counts)[:, None]

    def backward(g):
        a.grad += (g * inv)[ids]

    value = kernels.scatter_add_rows(a.value, ids, n_segments) * inv
    return _result(value, "segment_mean", (a,), backward)


def segment_softmax(scores, segment_ids, n_segments=None) -> Tensor:
    """Softmax of each column of ``scores`` within each segment."""
    s = as_tensor(scores)
    ids = _check_index(segment_ids, s.shape[0], "segment_ids")
    _check_sorted(ids)
    if n_segments is None:
        n_segments = int(ids.max()) + 1 if ids.size else 0
    shifted = s.value - kernels.segment_max(s.value, ids, n_segments)[ids]
    e = np.exp(shifted)
    y = e / kernels.scatter_add_rows(e, ids, n_segments)[ids]

    def backward(g):
        dot = kernels.scatter_add_rows(g * y, ids, n_segments)[ids]
        s.grad += y * (g - dot)

    return _result(y, "segment_softmax", (s,), backward)


def mul_rows(a, w) -> Tensor:
    """Scale row ``k`` of ``a`` by ``w[k]`` (``w`` is n x 1)."""
    a, w = as_tensor(a), as_tensor(w)
    if w.shape != (a.shape[0], 1):
        raise ShapeError(f"mul_rows needs weights of shape ({a.shape[0]}, 1), got {w.shape}")

    def backward(g):
        if a.requires_grad:
            a.grad += g * w.value
        if w.requires_grad:
            w.grad += (g * a.value).sum(axis=1, keepdims=True)

    return _result(a.value * w.value, "mul_rows", (a, w), backward)


def l2_normalize_rows(a, eps=1e-12) -> Tensor:
    a = as_tensor(a)
    norm = np.sqrt((a.value * a.value).sum(axis=1, keepdims=True))
    norm = np.maximum(norm, eps)
    y = a.value / norm

    def backward(g):
        a.grad += (g - y * (g * y).sum(axis=1, keepdims=True)) / norm

    return _result(y, "l2_normalize_rows", (a,), backward)


def mse(pred, target) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred.value - target.value
    n = diff.size

    def backward(g):
        scale = 2.0 * g[0, 0] / n
        if pred.requires_grad:
            pred.grad += scale * diff
        if target.requires_grad:
            target.grad -= scale * diff

    return _result(np.array([[np.mean(diff * diff)]]), "mse", (pred, target), backward)


# --------------------------------------------------------------------------
# reverse sweep


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a 1x1 loss, got {loss.shape}")
    if not loss.requires_grad:
        return
    loss.grad += 1.0
    for node in reversed(_topological(loss)):
        if node._backward is not None:
            node._backward(node.grad)


def zero_grad(params) -> None:
    for p in params:
        p.grad[...] = 0.0


def grad_check(f, params, h=1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` rebuilds the scalar loss from ``params`` on every call. The
    relative error of a coordinate is ``|a - n| / max(1, |a|, |n|)``.
    """
    params = list(params)
    zero_grad(params)
    backward(f())
    analytic = [p.grad.copy() for p in params]
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = f().value[0, 0]
            flat[i] = old - h
            down = f().value[0, 0]
            flat[i] = old
            numeric = (up - down) / (2 * h)
            ai = a.reshape(-1)[i]
            err = abs(ai - numeric) / max(1.0, abs(ai), abs(numeric))
            worst = max(worst, err)
    return worst


# --------------------------------------------------------------------------
# optimization


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, param, **kw) -> "AdamState":
        return cls(np.zeros_like(param), np.zeros_like(param), **kw)


def adam_step(state: AdamState, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; advances ``state`` and returns the new parameter."""
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = state.m / (1 - state.beta1**state.t)
    v_hat = state.v / (1 - state.beta2**state.t)
    return param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class Adam:
    params: list
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: list = field(init=False)

    def __post_init__(self):
        self.params = list(self.params)
        self.states = [
            AdamState.like(p.value, lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)
            for p in self.params
        ]

    def zero_grad(self):
        zero_grad(self.params)

    def step(self):
        for p, s in zip(self.params, self.states):
            p.value[...] = adam_step(s, p.value, p.grad)
