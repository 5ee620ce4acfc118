"""Reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and remembers, per parent, a closure mapping the
output gradient to that parent's gradient contribution. ``backward()`` does a
topological sweep and accumulates. Only what the backbone and losses need is
implemented: elementwise arithmetic, matmul, reductions, relu/exp/log/sqrt,
reshape/transpose, and a strided same-padding 1-D convolution.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to `shape` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()

    @classmethod
    def _result(cls, data: np.ndarray, parents) -> "Tensor":
        parents = tuple((p, fn) for p, fn in parents if p.requires_grad)
        out = cls(data, requires_grad=bool(parents))
        out._parents = parents
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    # --- graph traversal ---

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = grad
        for node in reversed(order):
            if node.grad is None:
                continue
            for parent, fn in node._parents:
                contribution = fn(node.grad)
                if parent.grad is None:
                    parent.grad = contribution
                else:
                    parent.grad = parent.grad + contribution

    def zero_grad(self) -> None:
        self.grad = None

    # --- elementwise arithmetic ---

    @staticmethod
    def _lift(other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(np.asarray(other))

    def __add__(self, other):
        other = self._lift(other)
        return Tensor._result(
            self.data + other.data,
            [(self, lambda g: _unbroadcast(g, self.shape)),
             (other, lambda g: _unbroadcast(g, other.shape))],
        )

    __radd__ = __add__

    def __neg__(self):
        return Tensor._result(-self.data, [(self, lambda g: -g)])

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        return Tensor._result(
            self.data * other.data,
            [(self, lambda g: _unbroadcast(g * other.data, self.shape)),
             (other, lambda g: _unbroadcast(g * self.data, other.shape))],
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        return Tensor._result(
            self.data / other.data,
            [(self, lambda g: _unbroadcast(g / other.data, self.shape)),
             (other, lambda g: _unbroadcast(-g * self.data / other.data**2, other.shape))],
        )

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only scalar exponents are supported")
        return Tensor._result(
            self.data**p,
            [(self, lambda g: g * p * self.data ** (p - 1))],
        )

    def __matmul__(self, other):
        other = self._lift(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeMismatch("matmul supports 2-D operands only")
        return Tensor._result(
            self.data @ other.data,
            [(self, lambda g: g @ other.data.T),
             (other, lambda g: self.data.T @ g)],
        )

    # --- elementwise functions ---

    def relu(self):
        mask = self.data > 0
        return Tensor._result(
            np.where(mask, self.data, 0.0),
            [(self, lambda g: g * mask)],
        )

    def exp(self):
        out = np.exp(self.data)
        return Tensor._result(out, [(self, lambda g: g * out)])

    def log(self):
        return Tensor._result(np.log(self.data), [(self, lambda g: g / self.data)])

    def sqrt(self):
        out = np.sqrt(self.data)
        return Tensor._result(out, [(self, lambda g: g * 0.5 / out)])

    # --- reductions / shape ---

    def sum(self, axis=None, keepdims=False):
        def grad_fn(g):
            if axis is None:
                return np.broadcast_to(g, self.shape)
            gg = g if keepdims else np.expand_dims(g, axis)
            return np.broadcast_to(gg, self.shape)
        return Tensor._result(self.data.sum(axis=axis, keepdims=keepdims), [(self, grad_fn)])

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else np.prod(
            [self.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))]
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        return Tensor._result(
            self.data.reshape(*shape),
            [(self, lambda g: g.reshape(self.shape))],
        )

    def transpose(self, *axes):
        inverse = tuple(np.argsort(axes))
        return Tensor._result(
            self.data.transpose(*axes),
            [(self, lambda g: g.transpose(*inverse))],
        )


def _fast_fft_len(n: int) -> int:
    """Smallest 5-smooth integer >= n (pocketfft is fastest at these sizes)."""
    while True:
        m = n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


def _pointwise_conv(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int) -> Tensor:
    w = weight.data[:, :, 0]
    xs = x.data[:, :, ::stride]
    y = np.matmul(w, xs)
    if bias is not None:
        y += bias.data[None, :, None]

    def grad_x(g):
        gx = np.zeros_like(x.data)
        gx[:, :, ::stride] = np.matmul(w.T, g)
        return gx

    def grad_w(g):
        return np.tensordot(g, xs, axes=([0, 2], [0, 2]))[:, :, None]

    parents = [(x, grad_x), (weight, grad_w)]
    if bias is not None:
        parents.append((bias, lambda g: g.sum(axis=(0, 2))))
    return Tensor._result(y, parents)


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 1) -> Tensor:
    """Same-padding strided cross-correlation, computed in the Fourier domain.

    x: (batch, in_channels, length); weight: (out_channels, in_channels, k);
    output length is ceil(length / stride).
    """
    batch, c_in, length = x.shape
    c_out, c_in_w, k = weight.shape
    if c_in_w != c_in:
        raise ShapeMismatch(f"conv1d: input has {c_in} channels, kernel expects {c_in_w}")
    if k == 1:
        return _pointwise_conv(x, weight, bias, stride)
    out_len = -(-length // stride)
    pad_total = max((out_len - 1) * stride + k - length, 0)
    pad_left = pad_total // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad_left, pad_total - pad_left)))
    padded_len = xp.shape[2]
    n = _fast_fft_len(padded_len + k - 1)

    # Spectra are kept frequency-major, (freq, batch, channel), so the channel
    # contractions become batched matrix products (complex einsum bypasses BLAS
    # and is several times slower at these shapes).
    xp_ft = np.ascontiguousarray(np.fft.rfft(xp, n=n, axis=2).transpose(2, 0, 1))
    # Correlation = convolution with the kernel reversed along its taps.
    w_rev_f = np.fft.rfft(weight.data[:, :, ::-1], n=n, axis=2)
    y_ft = np.matmul(xp_ft, np.ascontiguousarray(w_rev_f.transpose(2, 1, 0)))
    y_full = np.fft.irfft(y_ft, n=n, axis=0)[k - 1 : padded_len]
    y = np.ascontiguousarray(y_full[::stride][:out_len].transpose(1, 2, 0))
    if bias is not None:
        y += bias.data[None, :, None]

    # The incoming gradient is shared by both parent closures during one
    # backward pass; cache its FFT so it is computed only once.
    g_f_cache = [None, None]

    def grad_fft(g):
        if g_f_cache[0] is not g:
            if stride == 1:
                gd = g
            else:
                gd = np.zeros((batch, c_out, (out_len - 1) * stride + 1), dtype=g.dtype)
                gd[:, :, ::stride] = g
            g_f_cache[0] = g
            g_f_cache[1] = np.ascontiguousarray(
                np.fft.rfft(gd, n=n, axis=2).transpose(2, 0, 1)
            )
        return g_f_cache[1]

    def grad_x(g):
        g_ft = grad_fft(g)
        w_f = np.fft.rfft(weight.data, n=n, axis=2)
        gx_ft = np.matmul(g_ft, np.ascontiguousarray(w_f.transpose(2, 0, 1)))
        full = np.fft.irfft(gx_ft, n=n, axis=0)
        keep = min(padded_len, full.shape[0])
        gxp = np.zeros_like(xp)
        gxp[:, :, :keep] = full[:keep].transpose(1, 2, 0)
        return gxp[:, :, pad_left : pad_left + length]

    def grad_w(g):
        g_ft_conj = grad_fft(g).transpose(0, 2, 1).conj()
        gw_ft = np.matmul(g_ft_conj, xp_ft)
        gw_f = np.ascontiguousarray(gw_ft.transpose(1, 2, 0))
        return np.fft.irfft(gw_f, n=n, axis=2)[:, :, :k].astype(weight.dtype, copy=False)

    parents = [(x, grad_x), (weight, grad_w)]
    if bias is not None:
        parents.append((bias, lambda g: g.sum(axis=(0, 2))))
    return Tensor._result(y, parents)


def batch_norm_train(x: Tensor, gamma: Tensor, beta: Tensor, eps: float):
    """Batch normalisation over (batch, time) for a (batch, channels, time) input.

    Fused into a single graph node with a hand-written backward pass, which is
    markedly cheaper than composing it from elementwise primitives. Returns
    the normalised tensor together with the batch mean and (population)
    variance per channel, so the caller can update its running statistics.
    """
    mean = x.data.mean(axis=(0, 2))
    centered = x.data - mean[None, :, None]
    var = np.einsum("bct,bct->c", centered, centered) / (x.data.shape[0] * x.data.shape[2])
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered
    xhat *= inv[None, :, None]
    y = gamma.data[None, :, None] * xhat + beta.data[None, :, None]

    gxhat_cache = [None, None]

    def gxhat_sum(g):
        # Shared between the input and gamma gradients within one backward pass.
        if gxhat_cache[0] is not g:
            gxhat_cache[0] = g
            gxhat_cache[1] = np.einsum("bct,bct->c", g, xhat)
        return gxhat_cache[1]

    def grad_x(g):
        count = g.shape[0] * g.shape[2]
        mean_g = g.mean(axis=(0, 2))
        mean_gx = gxhat_sum(g) / count
        return (gamma.data * inv)[None, :, None] * (
            g - mean_g[None, :, None] - xhat * mean_gx[None, :, None]
        )

    parents = [
        (x, grad_x),
        (gamma, gxhat_sum),
        (beta, lambda g: g.sum(axis=(0, 2))),
    ]
    return Tensor._result(y, parents), mean, var


def affine_channels(x: Tensor, scale: np.ndarray, shift: np.ndarray) -> Tensor:
    """Per-channel affine map y = x * scale + shift with constant coefficients."""
    y = x.data * scale[None, :, None] + shift[None, :, None]
    return Tensor._result(y, [(x, lambda g: g * scale[None, :, None])])
