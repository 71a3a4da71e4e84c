"""Dense tensors with reverse-mode automatic differentiation.

Just enough machinery for the model: broadcasting elementwise math, batched
matrix products, per-channel temporal convolution, sliding-window average
pooling, batch normalization, the usual activations, and dropout. While grad
mode is enabled every op records itself on the implicit tape (the graph of
parent links plus a global execution counter); ``Tensor.backward`` replays
the recorded ops once each, in reverse execution order, and accumulates
gradients into leaf tensors.

Two float precisions are supported: single (the default) and double. Double
exists so finite-difference gradient checks have meaningful tolerances.
Graphs are confined to one thread; independent graphs may run on distinct
threads concurrently (grad/finite-check flags are thread local).
"""

from __future__ import annotations

import itertools
import math
import threading
from contextlib import contextmanager
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.fft as _fft

from .errors import ConfigError, NumericError, ShapeError

_LN10 = math.log(10.0)
_SEQ = itertools.count()

_state = threading.local()


def _grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


def _finite_checks() -> bool:
    return getattr(_state, "finite_checks", True)


@contextmanager
def no_grad():
    """Disable graph recording inside the block (forward values only)."""
    prev = _grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = prev


@contextmanager
def finite_checks(enabled: bool):
    """Toggle per-op NaN/Inf validation inside the block."""
    prev = _finite_checks()
    _state.finite_checks = enabled
    try:
        yield
    finally:
        _state.finite_checks = prev


def _as_dtype(dtype) -> np.dtype:
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigError(f"unsupported dtype {dt}; use float32 or float64")
    return dt


class Tensor:
    """N-dimensional array of reals with optional gradient tracking."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_seq")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(_as_dtype(dtype), copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._backward: Optional[Callable] = None
        self._seq = next(_SEQ)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self._not_scalar()

    def _not_scalar(self):
        raise ShapeError(f"expected a scalar tensor, got shape {self.shape}")

    def numpy(self) -> np.ndarray:
        """Detached copy of the values."""
        return self.data.copy()

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{grad})"

    # -- graph replay ---------------------------------------------------

    def backward(self) -> None:
        """Populate ``grad`` of every reachable leaf with d(self)/d(leaf).

        ``self`` must be scalar. Repeated calls without zeroing accumulate
        into leaf gradients; intermediate results never retain gradients.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward requires a scalar loss, got shape {self.shape}")
        nodes = []
        seen = set()
        stack = [self]
        while stack:
            t = stack.pop()
            if id(t) in seen:
                continue
            seen.add(id(t))
            nodes.append(t)
            stack.extend(t._parents)
        nodes.sort(key=lambda t: t._seq, reverse=True)

        flowing = {id(self): np.ones_like(self.data)}
        for node in nodes:
            g = flowing.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    if node.grad is None:
                        node.grad = np.zeros_like(node.data)
                    node.grad += g
                continue
            needs = tuple(
                p.requires_grad or p._backward is not None for p in node._parents
            )
            for parent, pg in zip(node._parents, node._backward(g, needs)):
                if pg is None:
                    continue
                prev = flowing.get(id(parent))
                flowing[id(parent)] = pg if prev is None else prev + pg

    # -- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(_coerce(other, self.dtype), -1.0))

    def __rsub__(self, other):
        return add(_coerce(other, self.dtype), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return mul(self, 1.0 / float(scalar))

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def transpose(self, axes):
        return transpose(self, axes)


class Parameter(Tensor):
    """Trainable tensor with a model-unique name.

    ``regularizable`` marks participation in the L1/L2 penalty terms of the
    training loss. The gradient buffer is allocated eagerly so an unused
    parameter reads as zero gradient after any backward pass.
    """

    __slots__ = ("name", "regularizable")

    def __init__(self, data, name: str, regularizable: bool = True, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)
        self.name = name
        self.regularizable = bool(regularizable)
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.data.dtype})"


def _coerce(value, dtype) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def _check_same_dtype(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.dtype != b.data.dtype:
        raise ShapeError(f"{op}: mixed dtypes {a.data.dtype} and {b.data.dtype}")


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: Optional[Callable]) -> Tensor:
    if _finite_checks() and not np.all(np.isfinite(data)):
        raise NumericError("operation produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._seq = next(_SEQ)
    if _grad_enabled() and any(p.requires_grad or p._backward is not None for p in parents):
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# -- elementwise arithmetic ------------------------------------------------


def add(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a.dtype)
    _check_same_dtype(a, b, "add")
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not broadcast") from exc

    def backward(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(g, b.shape) if needs[1] else None,
        )

    return _result(data, (a, b), backward)


def mul(a, b) -> Tensor:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a.dtype)
    _check_same_dtype(a, b, "mul")
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} do not broadcast") from exc

    def backward(g, needs):
        return (
            _unbroadcast(g * b.data, a.shape) if needs[0] else None,
            _unbroadcast(g * a.data, b.shape) if needs[1] else None,
        )

    return _result(data, (a, b), backward)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product requiring identical shapes."""
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: shapes {a.shape} and {b.shape} differ")
    return mul(a, b)


def square(x: Tensor) -> Tensor:
    def backward(g, needs):
        return (g * (2.0 * x.data),)

    return _result(x.data * x.data, (x,), backward)


def tabs(x: Tensor) -> Tensor:
    """Elementwise absolute value; subgradient 0 at the kink."""

    def backward(g, needs):
        return (g * np.sign(x.data),)

    return _result(np.abs(x.data), (x,), backward)


def pow_const(x: Tensor, exponent: float) -> Tensor:
    """x ** p for a fixed real exponent (positive inputs for fractional p)."""
    data = x.data ** exponent

    def backward(g, needs):
        return (g * (exponent * x.data ** (exponent - 1.0)),)

    return _result(data, (x,), backward)


def log_clamped(x: Tensor, floor: float = 1e-12) -> Tensor:
    """Natural log of max(x, floor); zero gradient inside the clamped region."""
    clamped = np.maximum(x.data, floor)

    def backward(g, needs):
        return (np.where(x.data > floor, g / clamped, 0.0).astype(x.data.dtype),)

    return _result(np.log(clamped), (x,), backward)


def log10_clamped(x: Tensor, floor: float = 1e-12) -> Tensor:
    """Base-10 log of max(x, floor); zero gradient inside the clamped region."""
    clamped = np.maximum(x.data, floor)

    def backward(g, needs):
        return (np.where(x.data > floor, g / (clamped * _LN10), 0.0).astype(x.data.dtype),)

    return _result(np.log10(clamped), (x,), backward)


# -- reductions --------------------------------------------------------------


def _expand_reduced(g: np.ndarray, shape: tuple, axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(a % len(shape) for a in axes)
    if not keepdims:
        full = list(g.shape)
        for a in sorted(axes):
            full.insert(a, 1)
        g = g.reshape(full)
    return np.broadcast_to(g, shape)


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g, needs):
        return (_expand_reduced(g, x.shape, axis, keepdims).astype(x.data.dtype, copy=False),)

    return _result(np.asarray(data), (x,), backward)


def tmean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = x.data.mean(axis=axis, keepdims=keepdims)
    count = x.data.size if axis is None else x.data.size // np.asarray(data).size

    def backward(g, needs):
        expanded = _expand_reduced(g, x.shape, axis, keepdims)
        return ((expanded / count).astype(x.data.dtype, copy=False),)

    return _result(np.asarray(data), (x,), backward)


# -- shape manipulation -------------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    try:
        data = x.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {x.shape} to {shape}") from exc

    def backward(g, needs):
        return (g.reshape(x.shape),)

    return _result(data, (x,), backward)


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g, needs):
        return (g.transpose(inverse),)

    return _result(x.data.transpose(axes), (x,), backward)


def swap_last(x: Tensor) -> Tensor:
    """Swap the two trailing axes (matrix transpose of stacked matrices)."""
    axes = tuple(range(x.ndim - 2)) + (x.ndim - 1, x.ndim - 2)
    return transpose(x, axes)


def stack(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = list(tensors)
    first = tensors[0]
    for t in tensors[1:]:
        if t.shape != first.shape:
            raise ShapeError("stack: all inputs must share one shape")
        _check_same_dtype(first, t, "stack")
    data = np.stack([t.data for t in tensors], axis=axis)
    pos = axis % data.ndim

    def backward(g, needs):
        moved = np.moveaxis(g, pos, 0)
        return tuple(moved[i] if needs[i] else None for i in range(len(tensors)))

    return _result(data, tensors, backward)


# -- linear algebra -----------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with broadcasting over leading (batch) axes."""
    _check_same_dtype(a, b, "matmul")
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul requires matrices, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    data = np.matmul(a.data, b.data)

    def backward(g, needs):
        ga = gb = None
        if needs[0]:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if needs[1]:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _result(data, (a, b), backward)


# -- activations --------------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)

    def backward(g, needs):
        return (np.where(x.data > 0.0, g, 0.0).astype(x.data.dtype, copy=False),)

    return _result(data, (x,), backward)


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    data = np.where(x.data >= 0.0, x.data, x.data * x.data.dtype.type(slope))

    def backward(g, needs):
        return (np.where(x.data >= 0.0, g, g * x.data.dtype.type(slope)),)

    return _result(data, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)

    def backward(g, needs):
        return (g * (1.0 - data * data),)

    return _result(data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g, needs):
        return (g * (data * (1.0 - data)),)

    return _result(data, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g, needs):
        inner = (g * data).sum(axis=axis, keepdims=True)
        return (data * (g - inner),)

    return _result(data, (x,), backward)


ACTIVATIONS = {"tanh": tanh, "sigmoid": sigmoid, "relu": relu}


# -- neural-net building blocks ----------------------------------------------


def _same_padding(kernel_len: int) -> tuple:
    left = (kernel_len - 1) // 2
    return left, kernel_len - 1 - left


def depthwise_conv_time(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Per-channel 1-D cross-correlation along time with 'same' zero padding.

    ``x`` is (N, T) or (batch, N, T); ``weight`` is (N, kernel_len); the
    optional ``bias`` is (N,). No kernel flip and no cross-channel mixing;
    output time length equals T. Computed via real FFTs sized to avoid
    circular wrap, so it matches the direct sum to float rounding.
    """
    if x.ndim not in (2, 3):
        raise ShapeError(f"depthwise_conv_time expects (N,T) or (B,N,T), got {x.shape}")
    if weight.ndim != 2:
        raise ShapeError(f"weights must be (N, kernel_len), got {weight.shape}")
    _check_same_dtype(x, weight, "depthwise_conv_time")
    n, t = x.shape[-2], x.shape[-1]
    if weight.shape[0] != n:
        raise ShapeError(f"weights cover {weight.shape[0]} channels, input has {n}")
    k = weight.shape[1]
    if k < 1:
        raise ConfigError("kernel_len must be >= 1")
    if k > t:
        raise ConfigError(f"kernel_len {k} exceeds time length {t}")
    if bias is not None and bias.shape != (n,):
        raise ShapeError(f"bias must be ({n},), got {bias.shape}")

    pad_left, _ = _same_padding(k)
    batched = x.ndim == 3

    if k == 1:
        wcol = weight.data[:, 0]
        data = x.data * wcol[:, None]

        def backward(g, needs):
            gx = gw = gb = None
            if needs[0]:
                gx = g * wcol[:, None]
            if needs[1]:
                axes = (0, 2) if batched else (1,)
                gw = (g * x.data).sum(axis=axes).reshape(n, 1)
            if bias is not None and needs[2]:
                gb = g.sum(axis=(0, 2) if batched else (1,))
            parts = (gx, gw) if bias is None else (gx, gw, gb)
            return parts
    else:
        nfft = _fft.next_fast_len(t + k - 1, real=True)
        xf = _fft.rfft(x.data, n=nfft, axis=-1)
        wf = _fft.rfft(weight.data, n=nfft, axis=-1)
        corr = _fft.irfft(xf * np.conj(wf), n=nfft, axis=-1)
        data = np.roll(corr, pad_left, axis=-1)[..., :t]
        data = np.ascontiguousarray(data, dtype=x.data.dtype)

        def backward(g, needs):
            gx = gw = gb = None
            gf = _fft.rfft(g, n=nfft, axis=-1)
            if needs[0]:
                conv = _fft.irfft(gf * wf, n=nfft, axis=-1)
                gx = np.roll(conv, -pad_left, axis=-1)[..., :t]
                gx = np.ascontiguousarray(gx, dtype=x.data.dtype)
            if needs[1]:
                cross = np.conj(gf) * xf
                if batched:
                    cross = cross.sum(axis=0)
                full = _fft.irfft(cross, n=nfft, axis=-1)
                gw = np.ascontiguousarray(
                    np.roll(full, pad_left, axis=-1)[:, :k], dtype=x.data.dtype
                )
            if bias is not None and needs[2]:
                gb = g.sum(axis=(0, 2) if batched else (1,))
            parts = (gx, gw) if bias is None else (gx, gw, gb)
            return parts

    if bias is not None:
        data = data + bias.data[:, None]
        return _result(data, (x, weight, bias), backward)
    return _result(data, (x, weight), backward)


def pointwise_conv(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """1x1 convolution: linearly map the trailing feature axis at every site.

    ``x`` is (..., C_in), ``weight`` is (C_out, C_in), ``bias`` is (C_out,).
    """
    if weight.ndim != 2:
        raise ShapeError(f"pointwise weights must be (C_out, C_in), got {weight.shape}")
    c_in = weight.shape[1]
    if x.shape[-1] != c_in:
        raise ShapeError(f"input has {x.shape[-1]} features, weights expect {c_in}")
    lead = x.shape[:-1]
    flat = reshape(x, (-1, c_in)) if x.ndim != 2 else x
    out = matmul(flat, swap_last(weight))
    out = reshape(out, lead + (weight.shape[0],))
    return add(out, bias)


def avgpool_time(x: Tensor, kernel: int) -> Tensor:
    """Sliding mean over the time axis (second-to-last), stride 1, no padding.

    Output time length is T - kernel + 1. kernel == 1 is the identity.
    """
    if x.ndim < 2:
        raise ShapeError(f"avgpool_time expects (..., T, C), got {x.shape}")
    t = x.shape[-2]
    if kernel < 1:
        raise ConfigError("pool kernel must be >= 1")
    if kernel > t:
        raise ConfigError(f"pool kernel {kernel} exceeds time length {t}")
    if kernel == 1:
        return x
    axis = x.ndim - 2
    t1 = t - kernel + 1

    cs = np.cumsum(x.data, axis=axis, dtype=np.float64)
    pad_shape = list(x.shape)
    pad_shape[axis] = 1
    cs = np.concatenate([np.zeros(pad_shape), cs], axis=axis)
    hi = np.take(cs, np.arange(kernel, t + 1), axis=axis)
    lo = np.take(cs, np.arange(0, t1), axis=axis)
    data = ((hi - lo) / kernel).astype(x.data.dtype)

    def backward(g, needs):
        csg = np.cumsum(g, axis=axis, dtype=np.float64)
        gpad = list(g.shape)
        gpad[axis] = 1
        csg = np.concatenate([np.zeros(gpad), csg], axis=axis)
        tau = np.arange(t)
        hi_idx = np.minimum(tau, t1 - 1) + 1
        lo_idx = np.maximum(tau - kernel + 1, 0)
        gx = (np.take(csg, hi_idx, axis=axis) - np.take(csg, lo_idx, axis=axis)) / kernel
        return (gx.astype(x.data.dtype),)

    return _result(data, (x,), backward)


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str,
    feature_axis: int = -1,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Batch normalization over all axes except ``feature_axis``.

    Train mode normalizes by batch statistics (biased variance) and updates
    the running buffers in place (the running variance uses the unbiased
    estimate); eval mode normalizes by the running buffers. Differentiable
    in both modes.
    """
    axis = feature_axis % x.ndim
    c = x.shape[axis]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"gamma/beta must be ({c},), got {gamma.shape}/{beta.shape}")
    if running_mean.shape != (c,) or running_var.shape != (c,):
        raise ShapeError(f"running stats must be ({c},)")
    if x.size == 0:
        raise ShapeError("batchnorm on an empty tensor")
    reduce_axes = tuple(i for i in range(x.ndim) if i != axis)
    bshape = tuple(c if i == axis else 1 for i in range(x.ndim))
    gb = gamma.data.reshape(bshape)
    bb = beta.data.reshape(bshape)
    dt = x.data.dtype

    if mode == "train":
        m = x.size // c
        if m < 2:
            raise ShapeError("batchnorm train mode needs at least 2 values per feature")
        mu = x.data.mean(axis=reduce_axes, keepdims=True)
        centered = x.data - mu
        var = np.mean(centered * centered, axis=reduce_axes, keepdims=True)
        inv = 1.0 / np.sqrt(var + dt.type(eps))
        xhat = centered * inv
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.reshape(c).astype(running_mean.dtype)
        running_var *= 1.0 - momentum
        running_var += momentum * (var.reshape(c) * (m / (m - 1))).astype(running_var.dtype)

        def backward(g, needs):
            gx = ggamma = gbeta = None
            if needs[1]:
                ggamma = (g * xhat).sum(axis=reduce_axes)
            if needs[2]:
                gbeta = g.sum(axis=reduce_axes)
            if needs[0]:
                dxhat = g * gb
                mean_dxhat = dxhat.mean(axis=reduce_axes, keepdims=True)
                mean_dxhat_xhat = (dxhat * xhat).mean(axis=reduce_axes, keepdims=True)
                gx = (inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)).astype(dt, copy=False)
            return gx, ggamma, gbeta

    elif mode == "eval":
        rm = running_mean.reshape(bshape).astype(dt)
        inv = (1.0 / np.sqrt(running_var.reshape(bshape) + eps)).astype(dt)
        xhat = (x.data - rm) * inv

        def backward(g, needs):
            gx = ggamma = gbeta = None
            if needs[0]:
                gx = g * (gb * inv)
            if needs[1]:
                ggamma = (g * xhat).sum(axis=reduce_axes)
            if needs[2]:
                gbeta = g.sum(axis=reduce_axes)
            return gx, ggamma, gbeta

    else:
        raise ConfigError(f"unknown batchnorm mode {mode!r}")

    data = gb * xhat + bb
    return _result(data.astype(dt, copy=False), (x, gamma, beta), backward)


def dropout(x: Tensor, rate: float, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Zero each value with probability ``rate`` and rescale survivors.

    Identity in eval mode or at rate 0. Train mode requires an explicit rng.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return x
    if mode != "train":
        raise ConfigError(f"unknown dropout mode {mode!r}")
    if rng is None:
        raise ConfigError("dropout in train mode needs an rng")
    scale = x.data.dtype.type(1.0 / (1.0 - rate))
    mask = (rng.random(x.shape) >= rate).astype(x.data.dtype) * scale

    def backward(g, needs):
        return (g * mask,)

    return _result(x.data * mask, (x,), backward)


# -- initialization ------------------------------------------------------------


def xavier_uniform(shape: tuple, fan_in: int, fan_out: int, rng: np.random.Generator, dtype) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(_as_dtype(dtype))


def backward(loss: Tensor) -> None:
    """Module-level alias for ``loss.backward()``."""
    loss.backward()
