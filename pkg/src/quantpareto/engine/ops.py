"""
Differentiable primitives.

Every op computes its forward value with numpy and hands a closure over the
saved inputs to ``apply_op``; the closure maps the output gradient to one
gradient per parent (None where a parent takes no gradient).
"""

from typing import Optional

import numpy as np

from quantpareto.core.errors import DatasetError, ShapeError
from quantpareto.engine import im2col as patches
from quantpareto.engine.im2col import Padding, output_size
from quantpareto.engine.tensor import Tensor, apply_op

BN_MOMENTUM = 0.9
BN_EPSILON = 1e-5


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")

    a_data, b_data = a.data, b.data

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [g @ b_data.T, a_data.T @ g]

    return apply_op(a_data @ b_data, (a, b), backward, "matmul")


def add(x: Tensor, y: Tensor) -> Tensor:
    """Elementwise sum of two tensors of identical shape"""
    if x.shape != y.shape:
        raise ShapeError(f"add expects identical shapes, got {x.shape} and {y.shape}")

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [g, g]

    return apply_op(x.data + y.data, (x, y), backward, "add")


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a per-channel bias along the last axis"""
    if bias.data.ndim != 1 or bias.shape[0] != x.shape[-1]:
        raise ShapeError(
            f"Bias of shape {bias.shape} does not match {x.shape[-1]} channels"
        )
    channels = bias.shape[0]

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [g, g.reshape(-1, channels).sum(axis=0)]

    return apply_op(x.data + bias.data, (x, bias), backward, "add_bias")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [np.where(mask, g, np.zeros_like(g))]

    return apply_op(np.where(mask, x.data, np.zeros_like(x.data)), (x,), backward, "relu")


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    in_shape = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"Cannot reshape {in_shape} to {shape}: {e}") from e

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [g.reshape(in_shape)]

    return apply_op(out, (x,), backward, "reshape")


def tensor_sum(x: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor"""
    in_shape = x.shape

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [np.broadcast_to(g, in_shape).copy()]

    return apply_op(np.asarray(x.data.sum()), (x,), backward, "sum")


def im2col(
    x: Tensor, kernel_h: int, kernel_w: int, stride: int, padding: Padding
) -> Tensor:
    """Patch matrix (N*Ho*Wo, kh*kw*C) of an NHWC tensor; backward is col2im"""
    x_shape = x.shape
    cols = patches.im2col(x.data, kernel_h, kernel_w, stride, padding)

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [patches.col2im(g, x_shape, kernel_h, kernel_w, stride, padding)]

    return apply_op(cols, (x,), backward, "im2col")


def conv2d(x: Tensor, kernel: Tensor, stride: int, padding: Padding) -> Tensor:
    """NHWC convolution with a [kh, kw, C_in, C_out] kernel, lowered to matmul"""
    if x.data.ndim != 4 or kernel.data.ndim != 4:
        raise ShapeError(
            f"conv2d expects NHWC input and 4-D kernel, got {x.shape} and {kernel.shape}"
        )
    kh, kw, c_in, c_out = kernel.shape
    n, h, w, c = x.shape
    if c != c_in:
        raise ShapeError(f"Input has {c} channels, kernel expects {c_in}")

    out_h = output_size(h, kh, stride, padding)
    out_w = output_size(w, kw, stride, padding)

    cols = im2col(x, kh, kw, stride, padding)
    flat = matmul(cols, reshape(kernel, (kh * kw * c_in, c_out)))
    return reshape(flat, (n, out_h, out_w, c_out))


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the spatial axes: (N, H, W, C) -> (N, C)"""
    if x.data.ndim != 4:
        raise ShapeError(f"global_avg_pool expects NHWC input, got {x.shape}")
    n, h, w, c = x.shape

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        spread = g[:, None, None, :] / (h * w)
        return [np.broadcast_to(spread, (n, h, w, c)).astype(g.dtype)]

    return apply_op(x.data.mean(axis=(1, 2)), (x,), backward, "global_avg_pool")


def max_pool(
    x: Tensor, window: int, stride: int, padding: Padding = Padding.SAME
) -> Tensor:
    """Max over square windows; padded cells never win"""
    if x.data.ndim != 4:
        raise ShapeError(f"max_pool expects NHWC input, got {x.shape}")
    x_shape = x.shape
    c = x_shape[3]

    windows = patches.extract_windows(
        x.data, window, window, stride, padding, pad_value=-np.inf
    )
    n, out_h, out_w = windows.shape[:3]
    flat = windows.reshape(n, out_h, out_w, window * window, c)
    winner = flat.argmax(axis=3)[:, :, :, None, :]
    out = np.take_along_axis(flat, winner, axis=3)[:, :, :, 0, :]

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        scattered = np.zeros((n, out_h, out_w, window * window, c), dtype=g.dtype)
        np.put_along_axis(scattered, winner, g[:, :, :, None, :], axis=3)
        cols = scattered.reshape(n * out_h * out_w, window * window * c)
        return [patches.col2im(cols, x_shape, window, window, stride, padding)]

    return apply_op(out, (x,), backward, "max_pool")


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
) -> Tensor:
    """Per-channel normalisation over every axis but the last.

    In training mode batch statistics are used and the running statistics are
    updated in place; in eval mode the running statistics are used.
    """
    channels = x.shape[-1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(
            f"gamma/beta must have shape ({channels},), got {gamma.shape}, {beta.shape}"
        )
    axes = tuple(range(x.data.ndim - 1))
    dtype = x.data.dtype

    if training:
        if x.shape[0] < 2:
            raise ShapeError("batch_norm needs a batch of at least 2 in train mode")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mean = running_mean.astype(dtype)
        var = running_var.astype(dtype)

    inv_std = (1.0 / np.sqrt(var + eps)).astype(dtype)
    x_hat = (x.data - mean) * inv_std
    out = gamma.data * x_hat + beta.data
    count = x.data.size // channels
    gamma_data = gamma.data

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        d_gamma = (g * x_hat).sum(axis=axes)
        d_beta = g.sum(axis=axes)
        d_hat = g * gamma_data
        if training:
            d_x = (inv_std / count) * (
                count * d_hat
                - d_hat.sum(axis=axes)
                - x_hat * (d_hat * x_hat).sum(axis=axes)
            )
        else:
            d_x = d_hat * inv_std
        return [d_x, d_gamma, d_beta]

    return apply_op(out, (x, gamma, beta), backward, "batch_norm")


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean over the batch of -log softmax(logits)[label]"""
    if logits.data.ndim != 2:
        raise ShapeError(f"Logits must be (N, K), got {logits.shape}")
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError(f"Expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DatasetError(f"Label out of range for {k} classes")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(n)
    loss = -log_probs[rows, labels].mean()

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        d_logits = np.exp(log_probs)
        d_logits[rows, labels] -= 1.0
        return [d_logits * (g / n)]

    return apply_op(np.asarray(loss, dtype=logits.data.dtype), (logits,), backward, "softmax_cross_entropy")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Stable log-softmax over the last axis, for metrics outside the tape"""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
