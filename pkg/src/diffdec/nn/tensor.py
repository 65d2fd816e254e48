"""Minimal numpy-backed reverse-mode autodiff.

Tensors wrap float64 arrays; every op that sees a grad-requiring operand
records a closure that scatters the output gradient back to its parents.
``backward()`` runs the closures in reverse topological order.  Graphs are
single-use: a second backward on the same root raises.

Only the ops the denoiser needs are provided (broadcasted add/mul, matmul,
reshape, row gather, softmax, gelu, layer norm, stable BCE-with-logits).
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self):
        """Reverse-mode sweep from this (scalar) tensor."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar root")
        if self._consumed:
            raise RuntimeError("graph already consumed by a previous backward()")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)
                node._backward = None
                node._parents = ()
        self._consumed = True

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcasted gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(grad, b.data.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(grad * a.data, b.data.shape))

    return _make(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError("matmul expects operands with ndim >= 2")
    data = a.data @ b.data

    def backward(grad):
        if a.requires_grad:
            ga = grad @ b.data.swapaxes(-1, -2)
            a._accumulate(_unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = a.data.swapaxes(-1, -2) @ grad
            b._accumulate(_unbroadcast(gb, b.data.shape))

    return _make(data, (a, b), backward)


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    old = a.data.shape
    data = a.data.reshape(shape)

    def backward(grad):
        a._accumulate(grad.reshape(old))

    return _make(data, (a,), backward)


def swap_last_axes(a) -> Tensor:
    a = _wrap(a)
    data = a.data.swapaxes(-1, -2)

    def backward(grad):
        a._accumulate(grad.swapaxes(-1, -2))

    return _make(data, (a,), backward)


def slice_leading(a, count: int, axis: int = 1) -> Tensor:
    """Keep the first ``count`` entries along ``axis`` (token readout)."""
    a = _wrap(a)
    index = tuple(slice(None) if ax != axis else slice(count) for ax in range(a.data.ndim))
    data = a.data[index]

    def backward(grad):
        full = np.zeros_like(a.data)
        full[index] = grad
        a._accumulate(full)

    return _make(data, (a,), backward)


def gather_rows(table, idx) -> Tensor:
    """out[i] = table[idx[i]]; backward scatter-adds into the table."""
    table = _wrap(table)
    idx = np.asarray(idx, dtype=np.int64)
    data = table.data[idx]

    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, grad)
        table._accumulate(full)

    return _make(data, (table,), backward)


def softmax_last(a) -> Tensor:
    """Softmax over the last axis; -inf entries get exactly zero weight."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(grad):
        inner = (grad * s).sum(axis=-1, keepdims=True)
        a._accumulate(s * (grad - inner))

    return _make(s, (a,), backward)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a) -> Tensor:
    """Smooth GELU (tanh approximation); smoothness keeps finite-difference
    gradient checks well-conditioned."""
    a = _wrap(a)
    x = a.data
    u = _GELU_C * (x + 0.044715 * x**3)
    th = np.tanh(u)
    data = 0.5 * x * (1.0 + th)

    def backward(grad):
        du = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        local = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th**2) * du
        a._accumulate(grad * local)

    return _make(data, (a,), backward)


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    a, gain, bias = _wrap(a), _wrap(gain), _wrap(bias)
    x = a.data
    d = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc**2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = xhat * gain.data + bias.data

    def backward(grad):
        if gain.requires_grad:
            gain._accumulate(_unbroadcast(grad * xhat, gain.data.shape))
        if bias.requires_grad:
            bias._accumulate(_unbroadcast(grad, bias.data.shape))
        if a.requires_grad:
            dxhat = grad * gain.data
            gsum = dxhat.sum(axis=-1, keepdims=True)
            gdot = (dxhat * xhat).sum(axis=-1, keepdims=True)
            a._accumulate((inv / d) * (d * dxhat - gsum - xhat * gdot))

    return _make(data, (a, gain, bias), backward)


def bce_with_logits_mean(logits, targets) -> Tensor:
    """Mean binary cross entropy from logits, in log-sum-exp stable form.

    loss = mean( max(l,0) - l*z + log(1 + exp(-|l|)) )
    """
    logits = _wrap(logits)
    z = np.asarray(targets, dtype=np.float64)
    if z.shape != logits.data.shape:
        raise ValueError(f"target shape {z.shape} != logits shape {logits.data.shape}")
    l = logits.data
    per = np.maximum(l, 0.0) - l * z + np.log1p(np.exp(-np.abs(l)))
    count = l.size
    data = np.asarray(per.sum() / count)

    def backward(grad):
        sig = 0.5 * (1.0 + np.tanh(0.5 * l))  # sigmoid, overflow-free
        logits._accumulate(grad * (sig - z) / count)

    return _make(data, (logits,), backward)
