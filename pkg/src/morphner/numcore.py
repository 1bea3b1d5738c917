"""A small reverse-mode differentiation core over float64 numpy arrays.

Only the operations the tagger needs are provided.  Recurrent layers are
recorded as single fused nodes with hand-written backpropagation through
time, which keeps the tape short enough for per-sentence SGD in pure numpy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RNG_ALGORITHM = "PCG64"


class ShapeError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class Tensor:
    """Dense array with a gradient buffer and a link into the recorded graph."""

    __slots__ = ("value", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, value, requires_grad=False, name=None, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.value) if requires_grad else None
        self.name = name
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

    def zero_grad(self):
        if self.grad is not None:
            self.grad.fill(0.0)

    def backward(self):
        """Fill ``grad`` of every reachable tensor with d(self)/d(tensor).

        Leaf gradients accumulate across calls; call ``zero_grad`` to reset.
        """
        if self.value.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.shape}")
        order = _topological_order(self)
        for node in order:
            if node.grad is None:
                node.grad = np.zeros_like(node.value)
        self.grad += 1.0
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)


def _topological_order(root: Tensor) -> list[Tensor]:
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
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def parameter(value, name=None) -> Tensor:
    return Tensor(value, requires_grad=True, name=name)


def _tracked(parents):
    return any(p.requires_grad or p._backward is not None for p in parents)


def _result(value, parents, backward):
    if not _tracked(parents):
        return Tensor(value)
    return Tensor(value, parents=tuple(parents), backward=backward)


def _accumulate(t: Tensor, g):
    if t.grad is not None:
        t.grad += g


# ---------------------------------------------------------------- elementwise


def add(a: Tensor, b: Tensor) -> Tensor:
    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _result(a.value + b.value, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def backward(g):
        _accumulate(a, _unbroadcast(g * b.value, a.shape))
        _accumulate(b, _unbroadcast(g * a.value, b.shape))

    return _result(a.value * b.value, (a, b), backward)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def tensor_sum(x: Tensor) -> Tensor:
    def backward(g):
        _accumulate(x, np.broadcast_to(g, x.shape))

    return _result(np.sum(x.value), (x,), backward)


def dot(a: Tensor, b: Tensor) -> Tensor:
    return tensor_sum(mul(a, b))


def scale(x: Tensor, mask: np.ndarray) -> Tensor:
    """Multiply by a constant array (used for dropout masks)."""
    mask = np.asarray(mask, dtype=np.float64)

    def backward(g):
        _accumulate(x, g * mask)

    return _result(x.value * mask, (x,), backward)


# ---------------------------------------------------------------- structural


def rows(table: Tensor, ids) -> Tensor:
    """Embedding lookup: gather ``table[ids]``."""
    ids = np.asarray(ids, dtype=np.intp)

    def backward(g):
        if table.grad is not None:
            np.add.at(table.grad, ids, g)

    return _result(table.value[ids], (table,), backward)


def take_row(x: Tensor, i: int) -> Tensor:
    def backward(g):
        if x.grad is not None:
            x.grad[i] += g

    return _result(x.value[i], (x,), backward)


def stack(vectors: list[Tensor]) -> Tensor:
    def backward(g):
        for k, v in enumerate(vectors):
            _accumulate(v, g[k])

    return _result(np.stack([v.value for v in vectors]), tuple(vectors), backward)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            _accumulate(t, piece)

    return _result(np.concatenate([t.value for t in tensors], axis=axis), tuple(tensors), backward)


# ---------------------------------------------------------------- layers


def linear(W: Tensor, b: Tensor, h: Tensor) -> Tensor:
    """``W @ h + b`` for a vector ``h``, applied row-wise for a matrix ``h``."""
    if W.value.ndim != 2 or b.shape != (W.shape[0],) or h.shape[-1] != W.shape[1]:
        raise ShapeError(f"linear: W{W.shape}, b{b.shape}, h{h.shape}")

    def backward(g):
        g2 = np.atleast_2d(g)
        h2 = np.atleast_2d(h.value)
        _accumulate(W, g2.T @ h2)
        _accumulate(b, g2.sum(axis=0))
        _accumulate(h, g @ W.value)

    return _result(h.value @ W.value.T + b.value, (W, b, h), backward)


def dropout_mask(dim, rate: float, rng: np.random.Generator | None = None, train: bool = True) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability ``rate``, else ``1 / (1 - rate)``."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return np.ones(dim)
    keep = rng.random(dim) >= rate
    return keep / (1.0 - rate)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class LstmParams:
    """Gate weights stacked as rows ``[input; forget; output; candidate]``.

    ``W`` has shape ``(4 * hidden_dim, input_dim + hidden_dim)``; each gate's
    block acts on the concatenation ``[x_t; h_prev]``.
    """

    input_dim: int
    hidden_dim: int
    W: Tensor
    b: Tensor

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator, name: str = "lstm"):
        h = hidden_dim
        W = glorot_uniform(rng, (4 * h, input_dim + h), input_dim + h, h)
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0
        return cls(input_dim, hidden_dim, parameter(W, f"{name}.W"), parameter(b, f"{name}.b"))

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, name: str = "lstm"):
        h = hidden_dim
        return cls(
            input_dim,
            hidden_dim,
            parameter(np.zeros((4 * h, input_dim + h)), f"{name}.W"),
            parameter(np.zeros(4 * h), f"{name}.b"),
        )

    def tensors(self) -> list[Tensor]:
        return [self.W, self.b]


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def lstm_step(p: LstmParams, x_t, h_prev, c_prev):
    """One LSTM recurrence on plain arrays; returns ``(h_t, c_t)``."""
    x_t, h_prev, c_prev = (np.asarray(v, dtype=np.float64) for v in (x_t, h_prev, c_prev))
    h = p.hidden_dim
    if x_t.shape != (p.input_dim,) or h_prev.shape != (h,) or c_prev.shape != (h,):
        raise ShapeError(
            f"lstm_step: expected x({p.input_dim},), h({h},), c({h},); "
            f"got {x_t.shape}, {h_prev.shape}, {c_prev.shape}"
        )
    z = p.W.value @ np.concatenate([x_t, h_prev]) + p.b.value
    i, f, o = _sigmoid(z[:h]), _sigmoid(z[h : 2 * h]), _sigmoid(z[2 * h : 3 * h])
    g = np.tanh(z[3 * h :])
    c_t = f * c_prev + i * g
    return o * np.tanh(c_t), c_t


def lstm_sequence(p: LstmParams, xs: Tensor, reverse: bool = False) -> Tensor:
    """Run an LSTM over the rows of ``xs`` from zero state.

    Returns an ``(n, hidden_dim)`` tensor whose row ``t`` is the hidden state
    after reading position ``t``; with ``reverse`` the rows are read
    right-to-left but stay aligned to input positions.
    """
    if xs.value.ndim != 2 or xs.shape[1] != p.input_dim:
        raise ShapeError(f"lstm_sequence: expected (n, {p.input_dim}) input, got {xs.shape}")
    n, h = xs.shape[0], p.hidden_dim
    if n == 0:
        raise ValueError("lstm_sequence: empty sequence")
    d = p.input_dim
    W = p.W.value
    Wh = W[:, d:]
    order = range(n - 1, -1, -1) if reverse else range(n)
    # input contributions for every step at once
    zx = xs.value @ W[:, :d].T + p.b.value

    H = np.zeros((n, h))
    gates = np.empty((n, 4 * h))
    C = np.empty((n, h))
    C_prev = np.empty((n, h))
    H_prev = np.empty((n, h))
    h_t = np.zeros(h)
    c_t = np.zeros(h)
    for t in order:
        H_prev[t] = h_t
        C_prev[t] = c_t
        z = zx[t] + Wh @ h_t
        a = gates[t]
        a[: 3 * h] = _sigmoid(z[: 3 * h])
        a[3 * h :] = np.tanh(z[3 * h :])
        c_t = a[h : 2 * h] * c_t + a[:h] * a[3 * h :]
        h_t = a[2 * h : 3 * h] * np.tanh(c_t)
        C[t] = c_t
        H[t] = h_t

    def backward(dH):
        dZ = np.empty((n, 4 * h))
        dh_next = np.zeros(h)
        dc_next = np.zeros(h)
        for t in reversed(order):
            a = gates[t]
            i, f, o, g = a[:h], a[h : 2 * h], a[2 * h : 3 * h], a[3 * h :]
            tc = np.tanh(C[t])
            dh = dH[t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = dZ[t]
            dz[:h] = dc * g * i * (1.0 - i)
            dz[h : 2 * h] = dc * C_prev[t] * f * (1.0 - f)
            dz[2 * h : 3 * h] = dh * tc * o * (1.0 - o)
            dz[3 * h :] = dc * i * (1.0 - g * g)
            dc_next = dc * f
            dh_next = Wh.T @ dz
        if p.W.grad is not None:
            p.W.grad[:, :d] += dZ.T @ xs.value
            p.W.grad[:, d:] += dZ.T @ H_prev
        _accumulate(p.b, dZ.sum(axis=0))
        _accumulate(xs, dZ @ W[:, :d])

    return _result(H, (p.W, p.b, xs), backward)


def bilstm_encode(fwd: LstmParams, bwd: LstmParams, xs: Tensor) -> Tensor:
    """Row ``i`` of the result is ``[forward h_i ; backward h_i]``."""
    if xs.shape[0] == 0:
        raise ValueError("bilstm_encode: empty sequence")
    return concat([lstm_sequence(fwd, xs), lstm_sequence(bwd, xs, reverse=True)], axis=1)


def sequence_embed(fwd: LstmParams, bwd: LstmParams, table: Tensor, symbols) -> Tensor:
    """Fixed-length summary of a symbol sequence: the final hidden state of
    each direction, concatenated (length ``2 * hidden_dim``)."""
    symbols = list(symbols)
    if not symbols:
        raise ValueError("sequence_embed: empty symbol sequence")
    xs = rows(table, symbols)
    last_fwd = take_row(lstm_sequence(fwd, xs), len(symbols) - 1)
    last_bwd = take_row(lstm_sequence(bwd, xs, reverse=True), 0)
    return concat([last_fwd, last_bwd])


# ---------------------------------------------------------------- optimisation


def global_grad_norm(params: list[Tensor]) -> float:
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))


def sgd_step(params: list[Tensor], lr: float, clip_norm: float = 5.0) -> float:
    """Clip gradients to a global L2 norm, apply a plain SGD update, zero grads.

    Returns the pre-clipping gradient norm.
    """
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise TrainingError(f"non-finite gradient in parameter {p.name!r}")
    norm = global_grad_norm(params)
    factor = clip_norm / norm if norm > clip_norm else 1.0
    for p in params:
        if lr:
            p.value -= (lr * factor) * p.grad
        p.grad.fill(0.0)
    return norm
