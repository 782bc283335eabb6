"""Minimal dense-tensor engine with reverse-mode differentiation.

Every differentiable op builds a node in an implicit tape (the DAG of
``Tensor`` objects); ``backward`` on a scalar walks the tape in reverse
topological order and accumulates gradients additively at fan-out points.
Only the ops the graph networks need are provided: matmul, sparse matmul
against a constant operator, add (with row-bias broadcast), scalar scaling,
column concatenation, ReLU, batch normalization, dropout, row softmax and
segment mean.

64-bit is the default and is mandatory for gradient checks; 32-bit is for
training speed only.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, ShapeError

TRAIN = "train"
EVAL = "eval"


class Tensor:
    """A numpy array plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, _parents=(), name=None):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        elif not arr.flags.writeable:
            arr = arr.copy()
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(_parents)
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, grad={self.requires_grad}{tag})"

    def detach(self):
        return Tensor(self.data.copy())

    def backward(self):
        """Reverse-mode sweep from a scalar.  Populates .grad on every
        reachable tensor with requires_grad set."""
        if self.data.size != 1:
            raise ShapeError(f"backward needs a scalar, got shape {self.shape}")
        order = []
        seen = set()

        def topo(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                topo(p)
            order.append(t)

        topo(self)
        for t in order:
            if t.requires_grad:
                t.grad = np.zeros_like(t.data)
        self.grad = np.ones_like(self.data)
        for t in reversed(order):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)


def _node(data, parents, backward_fn, name=None):
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents),
                 _parents=[p for p in parents if p.requires_grad], name=name)
    if out.requires_grad:
        out._backward = backward_fn
    return out


def _accum(t, g):
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} x {b.shape} do not conform")

    def backward(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _node(a.data @ b.data, (a, b), backward)


def spmm(op, x: Tensor) -> Tensor:
    """Sparse constant operator times a dense tensor.  ``op`` is a scipy
    sparse matrix (not differentiated)."""
    if op.shape[1] != x.shape[0]:
        raise ShapeError(f"spmm shapes {op.shape} x {x.shape} do not conform")
    op_t = op.T.tocsr()

    def backward(g):
        _accum(x, op_t @ g)

    return _node(op @ x.data, (x,), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; ``b`` may be a length-c row vector broadcast over
    the rows of an n-by-c ``a`` (bias addition)."""
    bias = a.data.ndim == 2 and b.data.ndim == 1 and b.shape[0] == a.shape[1]
    if not bias and a.shape != b.shape:
        raise ShapeError(f"add shapes {a.shape} and {b.shape} do not conform")

    def backward(g):
        _accum(a, g)
        _accum(b, g.sum(axis=0) if bias else g)

    return _node(a.data + b.data, (a, b), backward)


def scale(x: Tensor, c: float) -> Tensor:
    def backward(g):
        _accum(x, c * g)

    return _node(c * x.data, (x,), backward)


def concat_columns(tensors) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat_columns needs at least one tensor")
    rows = tensors[0].shape[0]
    for t in tensors:
        if t.data.ndim != 2 or t.shape[0] != rows:
            raise ShapeError("concat_columns: all tensors must be 2-D with equal row count")
    widths = [t.shape[1] for t in tensors]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            _accum(t, g[:, lo:hi])

    return _node(np.hstack([t.data for t in tensors]), tensors, backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        _accum(x, g * mask)

    return _node(np.where(mask, x.data, 0.0), (x,), backward)


def softmax_rows(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"softmax_rows needs a 2-D tensor, got {x.shape}")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        _accum(x, p * (g - (g * p).sum(axis=1, keepdims=True)))

    return _node(p, (x,), backward)


def dropout(x: Tensor, rate: float, mode: str, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate) so eval is identity."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == EVAL or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(g):
        _accum(x, g * keep)

    return _node(x.data * keep, (x,), backward)


def segment_mean(x: Tensor, segment_ids, num_segments: int) -> Tensor:
    """Row s of the output is the mean of the rows of x whose id is s."""
    ids = np.asarray(segment_ids, dtype=np.int64)
    if x.data.ndim != 2 or ids.shape != (x.shape[0],):
        raise ShapeError("segment_mean: x must be N-by-c with one id per row")
    if ids.min(initial=0) < 0 or (ids.max(initial=-1) >= num_segments):
        raise ShapeError("segment id out of range")
    counts = np.bincount(ids, minlength=num_segments).astype(x.dtype)
    if (counts == 0).any():
        raise ShapeError("segment_mean: empty segment")
    sums = np.zeros((num_segments, x.shape[1]), dtype=x.dtype)
    np.add.at(sums, ids, x.data)
    out = sums / counts[:, None]

    def backward(g):
        _accum(x, g[ids] / counts[ids, None])

    return _node(out, (x,), backward)


class BatchNorm:
    """Per-column batch normalization over the node rows of a mini-batch.

    Train mode standardizes with batch statistics and updates running
    stats with momentum 0.9; eval mode uses the running stats.
    """

    def __init__(self, channels, eps=1e-5, momentum=0.9, dtype=np.float64):
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True, name="bn.gamma")
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True, name="bn.beta")
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        if x.data.ndim != 2 or x.shape[1] != self.gamma.shape[0]:
            raise ShapeError(f"batch_norm: expected n x {self.gamma.shape[0]}, got {x.shape}")
        if x.shape[0] == 0:
            raise ShapeError("batch_norm: empty batch")
        gamma, beta, eps = self.gamma, self.beta, self.eps
        if mode == TRAIN:
            n = x.shape[0]
            mu = x.data.mean(axis=0)
            var = x.data.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + eps)
            xhat = (x.data - mu) * inv_std
            m = self.momentum
            self.running_mean = m * self.running_mean + (1 - m) * mu
            self.running_var = m * self.running_var + (1 - m) * var

            def backward(g):
                _accum(gamma, (g * xhat).sum(axis=0))
                _accum(beta, g.sum(axis=0))
                if x.requires_grad:
                    gx_hat = g * gamma.data
                    dx = (gx_hat - gx_hat.mean(axis=0)
                          - xhat * (gx_hat * xhat).mean(axis=0)) * inv_std
                    _accum(x, dx)

            out = xhat * gamma.data + beta.data
            return _node(out, (x, gamma, beta), backward)

        inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
        xhat = (x.data - self.running_mean) * inv_std

        def backward(g):
            _accum(gamma, (g * xhat).sum(axis=0))
            _accum(beta, g.sum(axis=0))
            _accum(x, g * gamma.data * inv_std)

        return _node(xhat * gamma.data + beta.data, (x, gamma, beta), backward)

    def parameters(self):
        return [self.gamma, self.beta]


def grad_check(f, params, epsilon=1e-5, max_entries=None, rng=None):
    """Compare analytic gradients of a scalar-valued ``f()`` against central
    finite differences over the entries of ``params``.

    Returns the maximum relative error |analytic - numeric| /
    max(|analytic|, |numeric|, 1e-8).  ``max_entries`` caps the number of
    coordinates probed per parameter (random subset) for large tensors.
    """
    loss = f()
    loss.backward()
    analytic = [p.grad.copy() for p in params]
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for p, a in zip(params, analytic):
        idx = np.arange(p.data.size)
        if max_entries is not None and p.data.size > max_entries:
            idx = rng.choice(idx, size=max_entries, replace=False)
        flat = p.data.reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + epsilon
            up = float(f().data.reshape(()))
            flat[i] = orig - epsilon
            down = float(f().data.reshape(()))
            flat[i] = orig
            numeric = (up - down) / (2 * epsilon)
            an = a.reshape(-1)[i]
            err = abs(an - numeric) / max(abs(an), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def assert_finite(t: Tensor, what="tensor"):
    if not np.isfinite(t.data).all():
        raise FloatingPointError(f"{what} contains NaN/Inf")
