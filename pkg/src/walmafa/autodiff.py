"""A small reverse-mode automatic differentiation tape over numpy arrays.

Every differentiable operation in the package produces a :class:`Tensor`
that remembers its parents and a closure mapping the output gradient to
parent gradients. :meth:`Tensor.backward` replays the graph in reverse
topological order.

Operations that receive only plain arrays (or tensors that do not require
gradients) record nothing, so inference runs without graph overhead.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _as_float_array(value, dtype=None):
    arr = np.asarray(value, dtype=dtype)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    return arr


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """An array node in the differentiation graph."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_float_array(data)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple = ()
        self._backward = None

    @classmethod
    def from_op(cls, data, parents, backward) -> "Tensor | np.ndarray":
        """Wrap an op result; ``backward(g)`` returns one gradient (or None) per parent."""
        track = any(isinstance(p, Tensor) and p.requires_grad for p in parents)
        out = cls(data, requires_grad=track)
        if track:
            out._parents = tuple(parents)
            out._backward = backward
        return out

    # -- basic protocol ---------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- backward pass ----------------------------------------------------
    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
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
                if isinstance(p, Tensor) and p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not (isinstance(p, Tensor) and p.requires_grad):
                    continue
                key = id(p)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, reciprocal(other))

    def __rtruediv__(self, other):
        return mul(other, reciprocal(self))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)


def data_of(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def is_tensor(x) -> bool:
    return isinstance(x, Tensor)


def _wrap(data, parents, backward, like_tensor: bool):
    if like_tensor:
        return Tensor.from_op(data, parents, backward)
    return data


def _any_tensor(*xs) -> bool:
    return any(isinstance(x, Tensor) for x in xs)


# -- elementwise ----------------------------------------------------------

def add(a, b):
    ad, bd = data_of(a), data_of(b)
    out = ad + bd
    return _wrap(out, (a, b),
                 lambda g: (unbroadcast(g, ad.shape), unbroadcast(g, bd.shape)),
                 _any_tensor(a, b))


def neg(a):
    return _wrap(-data_of(a), (a,), lambda g: (-g,), _any_tensor(a))


def mul(a, b):
    ad, bd = data_of(a), data_of(b)
    out = ad * bd
    return _wrap(out, (a, b),
                 lambda g: (unbroadcast(g * bd, ad.shape), unbroadcast(g * ad, bd.shape)),
                 _any_tensor(a, b))


def reciprocal(a):
    ad = data_of(a)
    out = 1.0 / ad
    return _wrap(out, (a,), lambda g: (-g * out * out,), _any_tensor(a))


def power(a, exponent: float):
    ad = data_of(a)
    out = ad ** exponent
    return _wrap(out, (a,), lambda g: (g * exponent * ad ** (exponent - 1),), _any_tensor(a))


def exp(a):
    out = np.exp(data_of(a))
    return _wrap(out, (a,), lambda g: (g * out,), _any_tensor(a))


def log(a):
    ad = data_of(a)
    return _wrap(np.log(ad), (a,), lambda g: (g / ad,), _any_tensor(a))


def sqrt(a):
    out = np.sqrt(data_of(a))
    return _wrap(out, (a,), lambda g: (g * 0.5 / out,), _any_tensor(a))


def sigmoid(a):
    ad = data_of(a)
    out = np.where(ad >= 0, 1.0 / (1.0 + np.exp(-np.abs(ad))),
                   np.exp(-np.abs(ad)) / (1.0 + np.exp(-np.abs(ad))))
    return _wrap(out, (a,), lambda g: (g * out * (1.0 - out),), _any_tensor(a))


def softplus(a):
    ad = data_of(a)
    out = np.logaddexp(0.0, ad)
    sig = data_of(sigmoid(ad))
    return _wrap(out, (a,), lambda g: (g * sig,), _any_tensor(a))


def silu(a):
    ad = data_of(a)
    sig = data_of(sigmoid(ad))
    out = ad * sig
    return _wrap(out, (a,), lambda g: (g * (sig + ad * sig * (1.0 - sig)),), _any_tensor(a))


def gelu(a):
    """Exact (erf-based) GELU."""
    ad = data_of(a)
    cdf = 0.5 * (1.0 + erf(ad / _SQRT2))
    out = ad * cdf
    return _wrap(out, (a,),
                 lambda g: (g * (cdf + ad * _INV_SQRT_2PI * np.exp(-0.5 * ad * ad)),),
                 _any_tensor(a))


# -- reductions and shape ops --------------------------------------------

def tsum(a, axis=None, keepdims=False):
    ad = data_of(a)
    out = ad.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, ad.shape).copy(),)

    return _wrap(out, (a,), backward, _any_tensor(a))


def mean(a, axis=None, keepdims=False):
    ad = data_of(a)
    if axis is None:
        count = ad.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([ad.shape[i] for i in axes]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(a, shape):
    ad = data_of(a)
    return _wrap(ad.reshape(shape), (a,), lambda g: (g.reshape(ad.shape),), _any_tensor(a))


def transpose(a, axes):
    inv = np.argsort(axes)
    return _wrap(np.transpose(data_of(a), axes), (a,),
                 lambda g: (np.transpose(g, inv),), _any_tensor(a))


def getitem(a, index):
    ad = data_of(a)

    def backward(g):
        full = np.zeros_like(ad)
        np.add.at(full, index, g)
        return (full,)

    return _wrap(ad[index], (a,), backward, _any_tensor(a))


def concat(items, axis=-1):
    datas = [data_of(t) for t in items]
    out = np.concatenate(datas, axis=axis)
    bounds = np.cumsum([d.shape[axis] for d in datas])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _wrap(out, tuple(items), backward, _any_tensor(*items))


def stack(items, axis=0):
    datas = [data_of(t) for t in items]
    out = np.stack(datas, axis=axis)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(datas)))

    return _wrap(out, tuple(items), backward, _any_tensor(*items))


def matmul(a, w):
    """``a[..., n] @ w[n, m]`` with a 2-D right operand."""
    ad, wd = data_of(a), data_of(w)
    out = ad @ wd

    def backward(g):
        ga = g @ wd.T
        gw = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gw

    return _wrap(out, (a, w), backward, _any_tensor(a, w))
