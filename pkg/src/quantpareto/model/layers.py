"""
Quantized Conv2D / Dense layers, batch norm and the forward-pass context.

Weights are fake-quantized with dynamic per-output-channel max-abs bounds on
every forward pass. Activations entering a layer are observed by its
calibrator until the freeze step and fake-quantized with the frozen bounds
from then on. In AQT mode the forward value comes from the integer-domain op
while gradients flow through the fake-quantized graph.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from quantpareto.calibration.calibrator import ActivationCalibrator, weight_bounds
from quantpareto.calibration.models import DEFAULT_EMA_DECAY, CalibrationSchedule
from quantpareto.core.errors import CalibrationError
from quantpareto.core.models import LayerKind, Precision, Signedness
from quantpareto.engine import ops
from quantpareto.engine.im2col import Padding
from quantpareto.engine.tensor import Parameter, Tensor, apply_op, current_tape
from quantpareto.quant.ops import quantized_conv2d, quantized_matmul
from quantpareto.quant.quantizer import (
    EPSILON_BOUND,
    compute_scales,
    fake_quantize,
    quant_range,
    ste_backward,
)
from quantpareto.quant.rounding import DEFAULT_ROUNDING, RoundingMode

logger = logging.getLogger(__name__)


class QuantMode(str, Enum):
    FAKE = "fake"
    AQT = "aqt"


class QuantEventKind(str, Enum):
    ACTIVATION_QUANTIZED = "activation_quantized"
    CALIBRATION_FROZEN = "calibration_frozen"


@dataclass(frozen=True)
class QuantEvent:
    """Emitted to forward hooks when a layer freezes or quantizes its input"""

    kind: QuantEventKind
    layer: str
    step: int
    bounds: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None


QuantHook = Callable[[QuantEvent], None]


@dataclass
class ForwardContext:
    """Per-call forward settings: step index, train/eval, quantization mode"""

    step: int = 0
    training: bool = False
    mode: QuantMode = QuantMode.FAKE
    rounding: RoundingMode = DEFAULT_ROUNDING
    hooks: list[QuantHook] = field(default_factory=list)

    def emit(self, event: QuantEvent) -> None:
        for hook in self.hooks:
            hook(event)


def fake_quant(
    x: Tensor,
    bounds: np.ndarray,
    precision: Precision,
    channel_axis: int = -1,
    rounding: RoundingMode = DEFAULT_ROUNDING,
) -> Tensor:
    """Differentiable fake quantization with the straight-through gradient"""
    clip_bounds = np.maximum(np.asarray(bounds, dtype=np.float64), EPSILON_BOUND)
    scales = compute_scales(clip_bounds, precision)
    out = fake_quantize(x.data, scales, quant_range(precision), channel_axis, rounding)
    x_data = x.data

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [ste_backward(g, x_data, clip_bounds, channel_axis, precision.signedness)]

    return apply_op(out, (x,), backward, "fake_quant")


def override_value(graph_out: Tensor, value: np.ndarray) -> Tensor:
    """Forward ``value``, backward through ``graph_out`` unchanged"""

    def backward(g: np.ndarray) -> list[Optional[np.ndarray]]:
        return [g]

    return apply_op(
        np.asarray(value, dtype=graph_out.data.dtype), (graph_out,), backward, "aqt_override"
    )


def he_normal(
    rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, gain: float, dtype: np.dtype  # type: ignore[type-arg]
) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(gain / fan_in)).astype(dtype)


def _allocate(
    shape: tuple[int, ...],
    dtype: np.dtype,  # type: ignore[type-arg]
    materialize: bool,
    init: Callable[[], np.ndarray],
) -> np.ndarray:
    if not materialize:
        return np.broadcast_to(np.zeros((), dtype=dtype), shape)
    return init()


class QuantLayer:
    """Shared activation and weight quantization of Conv2D and Dense layers"""

    kind: LayerKind
    weight: Parameter

    def __init__(
        self, name: str, bits: Optional[int], input_signedness: Signedness
    ) -> None:
        self.name = name
        self.bits = bits
        if bits is None:
            self.weight_precision = Precision.full()
            self.activation_precision = Precision.full()
        else:
            self.weight_precision = Precision.signed(bits)
            self.activation_precision = Precision(bits=bits, signedness=input_signedness)
        self.calibrator: Optional[ActivationCalibrator] = None

    @property
    def is_quantized(self) -> bool:
        return not self.weight_precision.is_full_precision

    @property
    def out_channels(self) -> int:
        return self.weight.shape[-1]

    def attach_calibration(
        self, schedule: CalibrationSchedule, decay: float = DEFAULT_EMA_DECAY
    ) -> None:
        if self.activation_precision.is_full_precision:
            self.calibrator = None
            return
        self.calibrator = ActivationCalibrator(self.name, schedule, decay=decay)

    def _quantized_input(
        self, x: Tensor, ctx: ForwardContext
    ) -> tuple[Tensor, Optional[np.ndarray]]:
        """Input to feed the op, plus the activation bounds when quantized"""
        if self.activation_precision.is_full_precision:
            return x, None

        calibrator = self.calibrator
        if calibrator is None:
            raise CalibrationError(f"Layer {self.name} has no calibration state")

        if ctx.training and calibrator.observe(x.data, ctx.step):
            ctx.emit(
                QuantEvent(
                    kind=QuantEventKind.CALIBRATION_FROZEN,
                    layer=self.name,
                    step=ctx.step,
                    bounds=calibrator.bounds,
                )
            )

        bounds = calibrator.bounds
        if bounds is None:
            return x, None

        if ctx.mode == QuantMode.AQT:
            # per-tensor so the scale factors out of the integer dot product
            bounds = np.asarray([bounds.max()])

        xq = fake_quant(x, bounds, self.activation_precision, -1, ctx.rounding)
        if ctx.hooks:
            ctx.emit(
                QuantEvent(
                    kind=QuantEventKind.ACTIVATION_QUANTIZED,
                    layer=self.name,
                    step=ctx.step,
                    bounds=bounds,
                    values=xq.data,
                    scales=compute_scales(
                        np.maximum(bounds, EPSILON_BOUND), self.activation_precision
                    ).scales,
                )
            )
        return xq, bounds

    def _quantized_weight(self, ctx: ForwardContext, matrix_shape: tuple[int, ...]) -> Tensor:
        if self.weight_precision.is_full_precision:
            return self.weight
        bounds = weight_bounds(self.weight.data.reshape(matrix_shape), out_channel_axis=-1)
        return fake_quant(self.weight, bounds, self.weight_precision, -1, ctx.rounding)

    def _aqt_inputs(self, bounds: Optional[np.ndarray]) -> tuple[Precision, np.ndarray]:
        if bounds is None:
            return Precision.full(), np.ones(1)
        return self.activation_precision, bounds

    def parameters(self) -> list[Parameter]:
        return [self.weight]


class QuantConv2D(QuantLayer):
    """NHWC convolution with a [kh, kw, C_in, C_out] kernel, SAME padding"""

    kind = LayerKind.CONV2D

    def __init__(
        self,
        name: str,
        kernel_size: int,
        stride: int,
        c_in: int,
        c_out: int,
        bits: Optional[int],
        input_signedness: Signedness,
        rng: np.random.Generator,
        dtype: np.dtype = np.dtype(np.float32),  # type: ignore[type-arg]
        materialize: bool = True,
    ) -> None:
        super().__init__(name, bits, input_signedness)
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = Padding.SAME
        self.c_in = c_in
        shape = (kernel_size, kernel_size, c_in, c_out)
        fan_in = kernel_size * kernel_size * c_in
        self.weight = Parameter(
            _allocate(shape, dtype, materialize, lambda: he_normal(rng, shape, fan_in, 2.0, dtype)),
            name=f"{name}/kernel",
        )

    def __call__(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        xq, bounds = self._quantized_input(x, ctx)
        matrix_shape = (-1, self.out_channels)

        if ctx.mode == QuantMode.AQT and self.is_quantized:
            a_precision, a_bound = self._aqt_inputs(bounds)
            value = quantized_conv2d(
                x.data,
                self.weight.data,
                self.stride,
                self.padding,
                a_precision,
                a_bound,
                self.weight_precision,
                ctx.rounding,
            )
            if current_tape() is None:
                return Tensor(value.astype(x.data.dtype, copy=False))
            graph = ops.conv2d(xq, self._quantized_weight(ctx, matrix_shape), self.stride, self.padding)
            return override_value(graph, value)

        wq = self._quantized_weight(ctx, matrix_shape)
        return ops.conv2d(xq, wq, self.stride, self.padding)


class QuantDense(QuantLayer):
    """(N, C_in) x [C_in, C_out] plus an unquantized bias"""

    kind = LayerKind.DENSE

    def __init__(
        self,
        name: str,
        c_in: int,
        c_out: int,
        bits: Optional[int],
        input_signedness: Signedness,
        rng: np.random.Generator,
        dtype: np.dtype = np.dtype(np.float32),  # type: ignore[type-arg]
        materialize: bool = True,
    ) -> None:
        super().__init__(name, bits, input_signedness)
        self.c_in = c_in
        shape = (c_in, c_out)
        self.weight = Parameter(
            _allocate(shape, dtype, materialize, lambda: he_normal(rng, shape, c_in, 1.0, dtype)),
            name=f"{name}/kernel",
        )
        self.bias = Parameter(
            _allocate((c_out,), dtype, materialize, lambda: np.zeros(c_out, dtype=dtype)),
            name=f"{name}/bias",
        )

    def __call__(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        xq, bounds = self._quantized_input(x, ctx)
        matrix_shape = (self.c_in, self.out_channels)

        if ctx.mode == QuantMode.AQT and self.is_quantized:
            a_precision, a_bound = self._aqt_inputs(bounds)
            value = quantized_matmul(
                x.data, self.weight.data, a_precision, a_bound, self.weight_precision, ctx.rounding
            )
            if current_tape() is None:
                out = Tensor(value.astype(x.data.dtype, copy=False))
            else:
                graph = ops.matmul(xq, self._quantized_weight(ctx, matrix_shape))
                out = override_value(graph, value)
        else:
            out = ops.matmul(xq, self._quantized_weight(ctx, matrix_shape))
        return ops.add_bias(out, self.bias)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


class BatchNorm:
    """Full-precision batch norm over the channel axis with running statistics"""

    def __init__(
        self,
        name: str,
        channels: int,
        dtype: np.dtype = np.dtype(np.float32),  # type: ignore[type-arg]
        materialize: bool = True,
    ) -> None:
        self.name = name
        self.gamma = Parameter(
            _allocate((channels,), dtype, materialize, lambda: np.ones(channels, dtype=dtype)),
            name=f"{name}/gamma",
        )
        self.beta = Parameter(
            _allocate((channels,), dtype, materialize, lambda: np.zeros(channels, dtype=dtype)),
            name=f"{name}/beta",
        )
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def __call__(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return ops.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var, ctx.training
        )

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta]
