"""Dense tensors with reverse-mode automatic differentiation.

Everything is backed by numpy arrays in float32 or float64. Each
differentiable operation records a backward closure on its output; calling
``backward()`` on a scalar runs the closures in reverse topological order
and accumulates gradients on every tensor that requires them. Every op
output is checked for NaN/Inf (see ``finite_checks``).
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class ConfigError(ValueError):
    """A structural hyperparameter is invalid."""


class ContractError(RuntimeError):
    """An operation was used outside its contract."""


class NonFiniteError(ArithmeticError):
    """An operation produced NaN or Inf."""


# Graph recording can be suspended (inference); finiteness checks can be
# disabled for micro-benchmarks but are on by default.
_grad_enabled = True
finite_checks = True


@contextmanager
def no_grad():
    """Suspend graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _check_finite(arr: np.ndarray) -> None:
    if finite_checks and not np.all(np.isfinite(arr)):
        raise NonFiniteError("operation produced a non-finite value")


class Tensor:
    """A numpy-backed array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        _check_finite(arr)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    # -- introspection ----------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_wrap(other, self.dtype), self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)

    def relu(self):
        return relu(self)

    def sqrt(self):
        return sqrt(self)

    def log(self):
        return log(self)

    def exp(self):
        return exp(self)

    # -- backward pass ----------------------------------------------------

    def backward(self) -> None:
        """Run reverse-mode differentiation from this scalar."""
        if self.data.shape != ():
            raise ContractError(
                f"backward requires a scalar, got shape {self.data.shape}"
            )
        if not self.requires_grad:
            raise ContractError("backward on a tensor with no graph")

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        # interior grads are scratch; drop them so only leaves keep state
        for node in topo:
            if node._backward is not None:
                node.grad = None
                node._parents = ()
                node._backward = None


def _wrap(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def _from_op(data: np.ndarray, parents: tuple, backward) -> Tensor:
    """Build an op output node. Package-internal extension point."""
    _check_finite(data)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    """Add a gradient contribution to ``t`` (no-op unless it needs one)."""
    if not t.requires_grad:
        return
    if g.dtype != t.data.dtype:
        g = g.astype(t.data.dtype)
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise arithmetic -----------------------------------------------


def add(a, b) -> Tensor:
    a = _wrap(a)
    b = _wrap(b, a.dtype)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _from_op(a.data + b.data, (a, b), bwd)


def sub(a, b) -> Tensor:
    a = _wrap(a)
    b = _wrap(b, a.dtype)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _from_op(a.data - b.data, (a, b), bwd)


def mul(a, b) -> Tensor:
    a = _wrap(a)
    b = _wrap(b, a.dtype)

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _from_op(a.data * b.data, (a, b), bwd)


def div(a, b) -> Tensor:
    a = _wrap(a)
    b = _wrap(b, a.dtype)

    def bwd(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _from_op(a.data / b.data, (a, b), bwd)


def sqrt(a) -> Tensor:
    a = _wrap(a)
    out_data = np.sqrt(a.data)

    def bwd(g):
        _accum(a, g / (2.0 * out_data))

    return _from_op(out_data, (a,), bwd)


def exp(a) -> Tensor:
    a = _wrap(a)
    out_data = np.exp(a.data)

    def bwd(g):
        _accum(a, g * out_data)

    return _from_op(out_data, (a,), bwd)


def log(a) -> Tensor:
    a = _wrap(a)

    def bwd(g):
        _accum(a, g / a.data)

    return _from_op(np.log(a.data), (a,), bwd)


# -- reductions, shape ops ------------------------------------------------


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    axes = _norm_axes(axis, a.data.ndim)

    def bwd(g):
        gg = g
        if axes is not None and not keepdims:
            for ax in sorted(axes):
                gg = np.expand_dims(gg, ax)
        _accum(a, np.broadcast_to(gg, a.data.shape).copy())

    return _from_op(a.data.sum(axis=axes, keepdims=keepdims), (a,), bwd)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    axes = _norm_axes(axis, a.data.ndim)
    if axes is None:
        count = a.data.size
    else:
        count = int(np.prod([a.data.shape[ax] for ax in axes]))
    inv = 1.0 / count

    def bwd(g):
        gg = g
        if axes is not None and not keepdims:
            for ax in sorted(axes):
                gg = np.expand_dims(gg, ax)
        _accum(a, np.broadcast_to(gg, a.data.shape) * inv)

    return _from_op(a.data.mean(axis=axes, keepdims=keepdims), (a,), bwd)


def _norm_axes(axis, ndim):
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    axes = tuple(ax % ndim for ax in axis)
    for ax in axes:
        if not 0 <= ax < ndim:
            raise ShapeError(f"axis {ax} out of range for ndim {ndim}")
    return axes


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    orig = a.data.shape

    def bwd(g):
        _accum(a, g.reshape(orig))

    return _from_op(a.data.reshape(shape), (a,), bwd)


def transpose(a, axes=None) -> Tensor:
    a = _wrap(a)
    if axes is None or len(axes) == 0:
        axes = tuple(reversed(range(a.data.ndim)))
    axes = tuple(axes)
    if len(axes) != a.data.ndim:
        raise ShapeError(f"transpose axes {axes} do not match ndim {a.data.ndim}")
    inverse = tuple(int(i) for i in np.argsort(axes))

    def bwd(g):
        _accum(a, g.transpose(inverse))

    return _from_op(np.ascontiguousarray(a.data.transpose(axes)), (a,), bwd)


def take(a, idx) -> Tensor:
    """Basic slicing/indexing (no duplicate fancy indices)."""
    a = _wrap(a)

    def bwd(g):
        gz = np.zeros_like(a.data)
        gz[idx] = g
        _accum(a, gz)

    return _from_op(np.ascontiguousarray(a.data[idx]), (a,), bwd)


def concat(tensors, axis: int) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    ndim = tensors[0].data.ndim
    if not -ndim <= axis < ndim:
        raise ShapeError(f"concat axis {axis} out of range for ndim {ndim}")
    ax = axis % ndim
    sizes = [t.data.shape[ax] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * ndim
            sl[ax] = slice(lo, hi)
            _accum(t, g[tuple(sl)])

    return _from_op(
        np.concatenate([t.data for t in tensors], axis=ax), tuple(tensors), bwd
    )


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError("matmul operands must have ndim >= 2")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions differ: {a.data.shape} @ {b.data.shape}"
        )

    def bwd(g):
        _accum(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        _accum(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return _from_op(a.data @ b.data, (a, b), bwd)


# -- activations ----------------------------------------------------------


def relu(a) -> Tensor:
    a = _wrap(a)
    mask = a.data > 0

    def bwd(g):
        _accum(a, g * mask)

    return _from_op(np.where(mask, a.data, 0.0), (a,), bwd)


def prelu(a, slope) -> Tensor:
    """PReLU with one learnable scalar slope for the whole site."""
    a = _wrap(a)
    slope = _wrap(slope, a.dtype)
    if slope.data.shape != ():
        raise ShapeError("prelu slope must be a scalar")
    pos = a.data > 0

    def bwd(g):
        _accum(a, g * np.where(pos, 1.0, slope.data))
        _accum(slope, np.asarray(np.sum(g * np.where(pos, 0.0, a.data))))

    return _from_op(np.where(pos, a.data, slope.data * a.data), (a, slope), bwd)


def softmax(a, axis: int = -1) -> Tensor:
    a = _wrap(a)
    if not -a.data.ndim <= axis < a.data.ndim:
        raise ShapeError(f"softmax axis {axis} out of range")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        inner = (g * out_data).sum(axis=axis, keepdims=True)
        _accum(a, out_data * (g - inner))

    return _from_op(out_data, (a,), bwd)


# -- linear map -----------------------------------------------------------


def linear(x, weight, bias=None) -> Tensor:
    """y[..., j] = sum_i x[..., i] * weight[i, j] (+ bias[j])."""
    x, weight = _wrap(x), _wrap(weight)
    if weight.data.ndim != 2:
        raise ShapeError("linear weight must be 2-D")
    if x.data.shape[-1] != weight.data.shape[0]:
        raise ShapeError(
            f"linear input width {x.data.shape[-1]} != weight rows "
            f"{weight.data.shape[0]}"
        )
    lead = x.data.shape[:-1]
    flat = x.reshape((-1, x.data.shape[-1])) if x.data.ndim != 2 else x
    out = matmul(flat, weight)
    if x.data.ndim != 2:
        out = out.reshape(lead + (weight.data.shape[1],))
    if bias is not None:
        bias = _wrap(bias)
        if bias.data.shape != (weight.data.shape[1],):
            raise ShapeError("linear bias shape must be (out_features,)")
        out = add(out, bias)
    return out


# -- 1-D convolutions -----------------------------------------------------


def conv1d(x, kernels, stride: int) -> Tensor:
    """Valid strided cross-correlation: (C_in, T) -> (C_out, T_out)."""
    x, kernels = _wrap(x), _wrap(kernels)
    if stride < 1:
        raise ConfigError("conv1d stride must be positive")
    if x.data.ndim != 2 or kernels.data.ndim != 3:
        raise ShapeError("conv1d expects x (C_in, T) and kernels (C_out, C_in, L)")
    c_in, t = x.data.shape
    c_out, kc_in, length = kernels.data.shape
    if kc_in != c_in:
        raise ShapeError(f"kernel input channels {kc_in} != {c_in}")
    if t < length:
        raise ShapeError(
            f"input length {t} shorter than kernel {length}; need at least {length}"
        )
    win = sliding_window_view(x.data, length, axis=-1)[:, ::stride, :]
    t_out = win.shape[1]
    out_data = np.einsum("oil,itl->ot", kernels.data, win)

    def bwd(g):
        if kernels.requires_grad:
            _accum(kernels, np.einsum("ot,itl->oil", g, win))
        if x.requires_grad:
            tmp = np.einsum("ot,oil->itl", g, kernels.data)
            gx = np.zeros_like(x.data)
            span = (t_out - 1) * stride + 1
            for off in range(length):
                gx[:, off : off + span : stride] += tmp[:, :, off]
            _accum(x, gx)

    return _from_op(out_data, (x, kernels), bwd)


def conv1d_transposed(x, kernels, stride: int) -> Tensor:
    """Adjoint of conv1d: (C_in, T) -> (C_out, (T-1)*stride + L)."""
    x, kernels = _wrap(x), _wrap(kernels)
    if stride < 1:
        raise ConfigError("transposed conv stride must be positive")
    if x.data.ndim != 2 or kernels.data.ndim != 3:
        raise ShapeError(
            "conv1d_transposed expects x (C_in, T) and kernels (C_in, C_out, L)"
        )
    c_in, t = x.data.shape
    kc_in, c_out, length = kernels.data.shape
    if kc_in != c_in:
        raise ShapeError(f"kernel input channels {kc_in} != {c_in}")
    t_out = (t - 1) * stride + length
    tmp = np.einsum("it,iol->otl", x.data, kernels.data)
    out_data = np.zeros((c_out, t_out), dtype=x.data.dtype)
    span = (t - 1) * stride + 1
    for off in range(length):
        out_data[:, off : off + span : stride] += tmp[:, :, off]

    def bwd(g):
        gw = sliding_window_view(g, length, axis=-1)[:, ::stride, :]
        if x.requires_grad:
            _accum(x, np.einsum("otl,iol->it", gw, kernels.data))
        if kernels.requires_grad:
            _accum(kernels, np.einsum("it,otl->iol", x.data, gw))

    return _from_op(out_data, (x, kernels), bwd)


def depthwise_conv1d(x, kernels) -> Tensor:
    """Per-channel same-length convolution: (..., C, T) -> (..., C, T).

    Kernel length must be odd; the input is zero-padded by (L-1)/2 per side.
    Channel c sees only kernel row c, with no cross-channel mixing.
    """
    x, kernels = _wrap(x), _wrap(kernels)
    if kernels.data.ndim != 2:
        raise ShapeError("depthwise kernels must be (C, L)")
    channels, length = kernels.data.shape
    if length % 2 == 0:
        raise ConfigError(f"depthwise kernel length must be odd, got {length}")
    if x.data.ndim < 2 or x.data.shape[-2] != channels:
        raise ShapeError(
            f"depthwise input channels {x.data.shape} incompatible with (C={channels}, L)"
        )
    t = x.data.shape[-1]
    pad = (length - 1) // 2
    xp = np.pad(x.data.reshape((-1, channels, t)), ((0, 0), (0, 0), (pad, pad)))
    win = sliding_window_view(xp, length, axis=-1)
    out_data = np.einsum("bctl,cl->bct", win, kernels.data).reshape(x.data.shape)

    def bwd(g):
        gf = g.reshape((-1, channels, t))
        if kernels.requires_grad:
            _accum(kernels, np.einsum("bctl,bct->cl", win, gf))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for off in range(length):
                gxp[:, :, off : off + t] += gf * kernels.data[:, off][:, None]
            _accum(x, gxp[:, :, pad : pad + t].reshape(x.data.shape))

    return _from_op(out_data, (x, kernels), bwd)


def pointwise_conv1d(x, weight, bias=None) -> Tensor:
    """Per-frame channel mixing on (C, T): y[:, t] = weight @ x[:, t] (+ bias).

    Implemented as ``linear`` on the transposed layout, so the two agree
    bit for bit in the same precision.
    """
    x, weight = _wrap(x), _wrap(weight)
    if x.data.ndim != 2 or weight.data.ndim != 2:
        raise ShapeError("pointwise_conv1d expects x (C, T) and weight (C, C)")
    if weight.data.shape[0] != weight.data.shape[1] or weight.data.shape[0] != x.data.shape[0]:
        raise ShapeError(
            f"pointwise weight {weight.data.shape} incompatible with x {x.data.shape}"
        )
    frames = transpose(x, (1, 0))
    w_t = transpose(weight, (1, 0))
    out = linear(frames, w_t, bias)
    return transpose(out, (1, 0))


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis with biased variance, then affine."""
    x, gamma, beta = _wrap(x), _wrap(gamma, x.dtype), _wrap(beta, x.dtype)
    if eps <= 0:
        raise ConfigError("layer_norm eps must be positive")
    width = x.data.shape[-1]
    if gamma.data.shape != (width,) or beta.data.shape != (width,):
        raise ShapeError("layer_norm gamma/beta must match the last axis")
    centered = sub(x, tmean(x, axis=-1, keepdims=True))
    variance = tmean(mul(centered, centered), axis=-1, keepdims=True)
    normed = div(centered, sqrt(add(variance, eps)))
    return add(mul(normed, gamma), beta)


LOG10_SCALE = 10.0 / math.log(10.0)


def decibels(ratio) -> Tensor:
    """10 * log10(ratio) for a positive scalar/array tensor."""
    return mul(log(ratio), LOG10_SCALE)
