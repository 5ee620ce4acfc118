"""Reverse-mode autodiff checked against central finite differences."""
import numpy as np
import pytest

from sleepssl.autodiff import Tensor, batch_norm_train, conv1d
from sleepssl.errors import ShapeMismatch


def _fd_check(fn, args, rel_tol=1e-5, abs_floor=1e-8, h=1e-6, probes=6, seed=0):
    """Compare Tensor gradients of scalar fn(*tensors) with finite differences."""
    rng = np.random.default_rng(seed)
    tensors = [Tensor(a.copy(), requires_grad=True) for a in args]
    out = fn(*tensors)
    out.backward()
    for pos, arr in enumerate(args):
        for _ in range(probes):
            idx = tuple(rng.integers(0, s) for s in arr.shape) if arr.shape else ()
            plus = [a.copy() for a in args]
            minus = [a.copy() for a in args]
            plus[pos][idx] += h
            minus[pos][idx] -= h
            f_plus = fn(*[Tensor(a) for a in plus]).data
            f_minus = fn(*[Tensor(a) for a in minus]).data
            fd = float((f_plus - f_minus) / (2 * h))
            an = float(tensors[pos].grad[idx])
            assert abs(fd - an) <= rel_tol * max(abs(fd), abs(an)) + abs_floor, (
                pos, idx, fd, an,
            )


def test_elementwise_chain():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(3, 4)) + 3.0
    _fd_check(lambda x, y: ((x * y + x - y / 2.0) ** 3).sum(), [a, b])


def test_exp_log_sqrt():
    x = np.random.default_rng(2).uniform(0.5, 2.0, size=(5,))
    _fd_check(lambda t: (t.exp() + t.log() + t.sqrt()).sum(), [x])


def test_relu_away_from_kink():
    x = np.array([[-2.0, -0.5, 0.5, 2.0]])
    _fd_check(lambda t: (t.relu() * t).sum(), [x])


def test_matmul():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(4, 3)), rng.normal(size=(3, 5))
    _fd_check(lambda x, y: (x @ y).sum(), [a, b])


def test_broadcasting_unbroadcast():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(4, 3)), rng.normal(size=(3,))
    _fd_check(lambda x, y: ((x + y) * y).mean(), [a, b])


def test_reductions_and_reshape():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(2, 3, 4))
    _fd_check(lambda t: (t.sum(axis=2) * 2.0).mean(), [a])
    _fd_check(lambda t: t.reshape(6, 4).transpose(1, 0).sum(), [a])
    _fd_check(lambda t: t.mean(axis=(0, 2), keepdims=True).sum(), [a])


def test_gradient_accumulates_over_reuse():
    x = Tensor(np.array([3.0]), requires_grad=True)
    y = x * x + x  # dy/dx = 2x + 1 = 7
    y.sum().backward()
    assert x.grad[0] == pytest.approx(7.0)


def test_deep_chain_no_recursion_limit():
    x = Tensor(np.array([1.0]), requires_grad=True)
    y = x
    for _ in range(5000):
        y = y + x
    y.sum().backward()
    assert x.grad[0] == pytest.approx(5001.0)


def _conv_oracle(x, w, b, stride):
    batch, c_in, length = x.shape
    d, _, k = w.shape
    out_len = -(-length // stride)
    pad = max((out_len - 1) * stride + k - length, 0)
    left = pad // 2
    xp = np.pad(x, ((0, 0), (0, 0), (left, pad - left)))
    y = np.zeros((batch, d, out_len))
    for t in range(out_len):
        y[:, :, t] = np.einsum("bck,dck->bd", xp[:, :, t * stride : t * stride + k], w)
    return y + b[None, :, None]


@pytest.mark.parametrize(
    "batch,c_in,length,c_out,k,stride",
    [(2, 1, 64, 4, 5, 1), (2, 3, 50, 4, 7, 2), (1, 2, 33, 3, 4, 3),
     (3, 2, 40, 5, 1, 2), (2, 4, 96, 6, 32, 2)],
)
def test_conv1d_matches_direct_oracle(batch, c_in, length, c_out, k, stride):
    rng = np.random.default_rng(6)
    x = rng.normal(size=(batch, c_in, length))
    w = rng.normal(size=(c_out, c_in, k))
    b = rng.normal(size=c_out)
    y = conv1d(Tensor(x), Tensor(w), Tensor(b), stride=stride)
    np.testing.assert_allclose(y.data, _conv_oracle(x, w, b, stride), atol=1e-10)


def test_conv1d_gradients():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(2, 3, 40))
    w = rng.normal(size=(4, 3, 7))
    b = rng.normal(size=4)
    g = rng.normal(size=(2, 4, 20))
    _fd_check(
        lambda xt, wt, bt: (conv1d(xt, wt, bt, stride=2) * Tensor(g)).sum(),
        [x, w, b],
        probes=8,
    )


def test_conv1d_channel_mismatch():
    with pytest.raises(ShapeMismatch):
        conv1d(Tensor(np.zeros((1, 2, 16))), Tensor(np.zeros((3, 4, 5))), None)


def test_batch_norm_train_matches_composed_form():
    rng = np.random.default_rng(8)
    x = rng.normal(2.0, 3.0, size=(4, 3, 17))
    gamma = rng.normal(1.0, 0.1, size=3)
    beta = rng.normal(size=3)
    eps = 1e-5
    out, mean, var = batch_norm_train(Tensor(x), Tensor(gamma), Tensor(beta), eps)
    m = x.mean(axis=(0, 2), keepdims=True)
    v = ((x - m) ** 2).mean(axis=(0, 2), keepdims=True)
    ref = gamma[None, :, None] * (x - m) / np.sqrt(v + eps) + beta[None, :, None]
    np.testing.assert_allclose(out.data, ref, atol=1e-12)
    np.testing.assert_allclose(mean, m.reshape(-1), atol=1e-12)
    np.testing.assert_allclose(var, v.reshape(-1), atol=1e-12)


def test_batch_norm_train_gradients():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(4, 3, 11))
    gamma = rng.normal(1.0, 0.1, size=3)
    beta = rng.normal(size=3)
    g = rng.normal(size=(4, 3, 11))
    _fd_check(
        lambda xt, gt, bt: (batch_norm_train(xt, gt, bt, 1e-5)[0] * Tensor(g)).sum(),
        [x, gamma, beta],
        probes=8,
    )
