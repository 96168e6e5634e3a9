"""
Central finite-difference gradient checks
"""

from typing import Callable, Sequence

import numpy as np

from quantpareto.engine.tensor import Tape, Tensor

DEFAULT_STEP = 1e-4


def numerical_gradient(
    loss_fn: Callable[[], Tensor], tensor: Tensor, h: float = DEFAULT_STEP
) -> np.ndarray:
    """d(loss)/d(tensor) by central differences, perturbing ``tensor.data`` in place"""
    if not tensor.data.flags.c_contiguous:
        tensor.data = np.ascontiguousarray(tensor.data)
    data = tensor.data
    grad = np.zeros(data.shape, dtype=np.float64)
    flat = data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = loss_fn().item()
        flat[i] = original - h
        minus = loss_fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / (||a|| + ||n||), zero when both vanish"""
    denom = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / denom


def gradient_check(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = DEFAULT_STEP,
) -> dict[str, float]:
    """Relative error between tape gradients and finite differences per tensor.

    ``loss_fn`` must rebuild the loss from the current tensor values on each
    call. Run it in float64.
    """
    for t in tensors:
        t.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    analytic = tape.backward(loss)

    errors: dict[str, float] = {}
    for i, t in enumerate(tensors):
        a = analytic.get(t, np.zeros_like(t.data))
        errors[t.name or f"tensor{i}"] = relative_error(
            np.asarray(a, dtype=np.float64), numerical_gradient(loss_fn, t, h)
        )
    return errors
