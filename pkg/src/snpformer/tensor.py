"""Small dense tensor engine with reverse-mode gradients and AdamW.

Only the operations the encoder model needs are provided. Tensors wrap a
numpy array; graph nodes record their parents and a closure mapping the
output gradient to parent gradients. Float32 is the training dtype, float64
is used for finite-difference checks.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import LabelError, NumericError, RankError, ShapeError, VocabError

_GRAD_ENABLED = True
_CHECKED = False

# (n x n) attention matrices handled per numpy call; small chunks stay in cache.
_ATTN_CHUNK = 1


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


@contextlib.contextmanager
def checked_mode(enabled: bool = True):
    """Raise :class:`NumericError` as soon as any op produces NaN or Inf."""
    global _CHECKED
    prev, _CHECKED = _CHECKED, enabled
    try:
        yield
    finally:
        _CHECKED = prev


def _as_float(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float32)
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        self.data = _as_float(data, dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self.data)

    # operators
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_lift(other, self.dtype)))

    def __rsub__(self, other):
        return add(_lift(other, self.dtype), neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a tensor is not supported")
        return mul(self, 1.0 / other)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> Tensor:
        return transpose(self, axes or None)

    def swapaxes(self, a: int, b: int) -> Tensor:
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    def sum(self, axis=None, keepdims=False) -> Tensor:
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False) -> Tensor:
        return tmean(self, axis, keepdims)

    def backward(self, grad: np.ndarray | None = None):
        backward(self, grad=grad)


def _lift(x, dtype=None) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=dtype or np.float32))


def _node(data: np.ndarray, parents: Sequence[Tensor], backward_fn) -> Tensor:
    if _CHECKED and not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values produced by {getattr(backward_fn, '__qualname__', 'op')}")
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def backward(loss: Tensor, params: Iterable[Tensor] | None = None, grad: np.ndarray | None = None):
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``.grad``.

    ``loss`` must be a scalar unless an explicit seed ``grad`` is given.
    When ``params`` is passed, their gradients are returned as arrays, with
    zeros for parameters the loss does not reach.
    """
    if grad is None:
        if loss.data.size != 1:
            raise RankError(f"backward needs a scalar loss, got shape {loss.shape}")
        grad = np.ones_like(loss.data)
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen and parent.requires_grad:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.asarray(grad, dtype=loss.dtype)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg

    if params is not None:
        return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    return None


# elementwise


def add(a, b) -> Tensor:
    a = _lift(a, getattr(b, "dtype", None))
    b = _lift(b, a.dtype)

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a = _lift(a, getattr(b, "dtype", None))
    if isinstance(b, (int, float, np.number)):
        scale = float(b)

        def bw_scalar(g):
            return (g * scale,)

        return _node(a.data * scale, (a,), bw_scalar)
    b = _lift(b, a.dtype)

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), bw)


def relu(x: Tensor) -> Tensor:
    on = x.data > 0
    return _node(np.where(on, x.data, 0).astype(x.dtype), (x,), lambda g: (g * on,))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """Tanh-approximated GELU."""
    d = x.data
    inner = _GELU_C * (d + 0.044715 * (d * d * d))
    t = np.tanh(inner)
    out = 0.5 * d * (1.0 + t)

    def bw(g):
        deriv = 0.5 * (1.0 + t) + 0.5 * d * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * d * d)
        return (g * deriv,)

    return _node(out, (x,), bw)


# shape


def reshape(x: Tensor, shape) -> Tensor:
    src = x.shape
    return _node(x.data.reshape(shape), (x,), lambda g: (g.reshape(src),))


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(range(x.ndim))[::-1] if axes is None else tuple(a % x.ndim for a in axes)
    inverse = tuple(np.argsort(axes))
    return _node(x.data.transpose(axes), (x,), lambda g: (g.transpose(inverse),))


def tsum(x: Tensor, axis=None, keepdims=False) -> Tensor:
    src = x.shape

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src).astype(x.dtype, copy=True),)

    return _node(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), bw)


def tmean(x: Tensor, axis=None, keepdims=False) -> Tensor:
    count = x.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return tsum(x, axis, keepdims) * (1.0 / float(count))


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    sizes = [x.shape[axis] for x in xs]
    cuts = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _node(np.concatenate([x.data for x in xs], axis=axis), tuple(xs), bw)


# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` with numpy batching rules (leading dims of ``a`` may be batch dims)."""
    a, b = _lift(a), _lift(b, a.dtype if isinstance(a, Tensor) else None)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}") from exc

    def bw(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            if b.ndim == 2 and a.ndim > 2:
                gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            else:
                gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _node(out, (a, b), bw)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else add(out, bias)


# normalisation and probabilities


def _softmax_np(x: np.ndarray, axis: int) -> np.ndarray:
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    e /= e.sum(axis=axis, keepdims=True)
    return e


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    s = _softmax_np(x.data, axis)

    def bw(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return _node(s, (x,), bw)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def bw(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _node(out, (x,), bw)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    d = x.data
    mu = d.mean(axis=-1, keepdims=True)
    xc = d - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def bw(g):
        flat_g = g.reshape(-1, g.shape[-1])
        dgain = (flat_g * xhat.reshape(flat_g.shape)).sum(axis=0) if gain.requires_grad else None
        dbias = flat_g.sum(axis=0) if bias.requires_grad else None
        dx = None
        if x.requires_grad:
            dxhat = g * gain.data
            dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, dgain, dbias

    return _node(out, (x, gain, bias), bw)


def attention(q: Tensor, k: Tensor, v: Tensor, return_weights: bool = False):
    """Scaled dot-product attention ``softmax(q k^T / sqrt(d)) v``.

    Inputs have shape ``(..., n, d)``; leading dims are independent
    attention problems (batch, heads). The softmax weights are kept for the
    backward pass and optionally returned.
    """
    if not (q.shape == k.shape and q.shape[:-1] == v.shape[:-1]):
        raise ShapeError(f"attention shapes disagree: q{q.shape} k{k.shape} v{v.shape}")
    lead, (n, d) = q.shape[:-2], q.shape[-2:]
    dv = v.shape[-1]
    scale = 1.0 / math.sqrt(d)
    Q = q.data.reshape(-1, n, d)
    K = k.data.reshape(-1, n, d)
    V = v.data.reshape(-1, n, dv)
    Qs = Q * scale
    m = Q.shape[0]
    P = np.empty((m, n, n), dtype=q.dtype)
    out = np.empty((m, n, dv), dtype=q.dtype)
    for i in range(0, m, _ATTN_CHUNK):
        j = slice(i, i + _ATTN_CHUNK)
        s = np.matmul(Qs[j], np.swapaxes(K[j], -1, -2))
        s -= s.max(axis=-1, keepdims=True)
        np.exp(s, out=s)
        s /= s.sum(axis=-1, keepdims=True)
        P[j] = s
        out[j] = np.matmul(s, V[j])

    def bw(g):
        G = g.reshape(m, n, dv)
        # sum_j dP_ij P_ij equals the row-wise dot of the output and its gradient
        row_dot = (G * out).sum(axis=-1, keepdims=True)
        dQ = np.empty_like(Q)
        dK = np.empty_like(K)
        dV = np.empty_like(V)
        for i in range(0, m, _ATTN_CHUNK):
            j = slice(i, i + _ATTN_CHUNK)
            p = P[j]
            dV[j] = np.matmul(np.swapaxes(p, -1, -2), G[j])
            ds = np.matmul(G[j], np.swapaxes(V[j], -1, -2))
            ds -= row_dot[j]
            ds *= p
            dQ[j] = np.matmul(ds, K[j])
            dK[j] = np.matmul(np.swapaxes(ds, -1, -2), Qs[j])
        dQ *= scale
        return dQ.reshape(q.shape), dK.reshape(k.shape), dV.reshape(v.shape)

    result = _node(out.reshape(lead + (n, dv)), (q, k, v), bw)
    if return_weights:
        return result, P.reshape(lead + (n, n))
    return result


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup ``table[ids]``; gradients scatter-add back into the table."""
    ids = np.asarray(ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise VocabError(f"token ids must be integers, got dtype {ids.dtype}")
    vocab = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        bad = ids[(ids < 0) | (ids >= vocab)].ravel()[0]
        raise VocabError(f"token id {bad} outside vocabulary of size {vocab}")

    def bw(g):
        dt = np.zeros_like(table.data)
        np.add.at(dt, ids.ravel(), g.reshape(-1, table.shape[1]))
        return (dt,)

    return _node(table.data[ids], (table,), bw)


# losses


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under ``softmax(logits)``."""
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy expects (B, C) logits and (B,) labels, got {logits.shape}, {labels.shape}")
    n_cls = logits.shape[1]
    if labels.size and (not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0 or labels.max() >= n_cls):
        raise LabelError(f"labels must be integers in [0, {n_cls})")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    b = len(labels)
    loss = -logp[rows, labels].mean()

    def bw(g):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        return (d * (g / b),)

    return _node(np.asarray(loss, dtype=logits.dtype), (logits,), bw)


def mse_loss(pred: Tensor, target) -> Tensor:
    target = np.asarray(target, dtype=pred.dtype)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred.data - target
    n = diff.size

    def bw(g):
        return (diff * (2.0 * g / n),)

    return _node(np.asarray((diff * diff).mean(), dtype=pred.dtype), (pred,), bw)


# optimiser


@dataclass
class AdamState:
    """AdamW hyper-parameters and moment buffers."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray | None] | None, state: AdamState,
              checked: bool = False) -> None:
    """One bias-corrected Adam update with decoupled weight decay, in place.

    ``param <- param * (1 - lr * wd)`` is applied before the Adam delta.
    """
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise ShapeError("params and grads differ in length")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if checked or _CHECKED:
        for p, g in zip(params, grads):
            if g is not None and not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {p.name or 'parameter'} at step {state.t + 1}")
    state.t += 1
    b1, b2, lr = state.beta1, state.beta2, state.lr
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    decay = 1.0 - lr * state.weight_decay
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if state.weight_decay:
            p.data *= decay
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


class Adam:
    def __init__(self, params: Sequence[Tensor], lr=1e-4, weight_decay=0.01, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self, checked: bool = False):
        adam_step(self.params, [p.grad for p in self.params], self.state, checked=checked)
