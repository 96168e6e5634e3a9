"""
ResNet v1.5 builder: conv_init, bottleneck block groups with a projection on
each group's first block, global average pool and a dense head.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from quantpareto.calibration.calibrator import ActivationCalibrator
from quantpareto.calibration.models import DEFAULT_EMA_DECAY, CalibrationSchedule
from quantpareto.core.errors import ConfigError, CostModelError
from quantpareto.core.models import LayerKind, LayerManifest, LayerShape, Signedness
from quantpareto.engine import ops
from quantpareto.engine.im2col import Padding, output_size
from quantpareto.engine.tensor import Parameter, Tensor
from quantpareto.model.layers import (
    BatchNorm,
    ForwardContext,
    QuantConv2D,
    QuantDense,
    QuantLayer,
)
from quantpareto.model.spec import (
    FIRST_LAYER,
    LAST_LAYER,
    LayerQuantConfig,
    ResNetSpec,
    scaled_widths,
)

logger = logging.getLogger(__name__)

MAX_POOL_WINDOW = 3
MAX_POOL_STRIDE = 2

Array = Union[np.ndarray, Tensor]


@dataclass
class _Builder:
    quant_cfg: LayerQuantConfig
    rng: np.random.Generator
    dtype: np.dtype  # type: ignore[type-arg]
    materialize: bool

    def conv(
        self,
        name: str,
        kernel: int,
        stride: int,
        c_in: int,
        c_out: int,
        input_signedness: Signedness = Signedness.UNSIGNED,
    ) -> QuantConv2D:
        return QuantConv2D(
            name,
            kernel,
            stride,
            c_in,
            c_out,
            self.quant_cfg.bits_for(name),
            input_signedness,
            self.rng,
            self.dtype,
            self.materialize,
        )

    def bn(self, name: str, channels: int) -> BatchNorm:
        return BatchNorm(name, channels, self.dtype, self.materialize)


class BottleneckBlock:
    """1x1 -> 3x3 (carries the stride) -> 1x1, plus an optional projection"""

    def __init__(
        self,
        name: str,
        c_in: int,
        mid: int,
        out: int,
        stride: int,
        project: bool,
        builder: _Builder,
    ) -> None:
        self.name = name
        self.stride = stride
        self.conv1 = builder.conv(f"{name}/conv1", 1, 1, c_in, mid)
        self.bn1 = builder.bn(f"{name}/conv1/bn", mid)
        self.conv2 = builder.conv(f"{name}/conv2", 3, stride, mid, mid)
        self.bn2 = builder.bn(f"{name}/conv2/bn", mid)
        self.conv3 = builder.conv(f"{name}/conv3", 1, 1, mid, out)
        self.bn3 = builder.bn(f"{name}/conv3/bn", out)
        self.projection: Optional[QuantConv2D] = None
        self.bn_projection: Optional[BatchNorm] = None
        if project:
            self.projection = builder.conv(f"{name}/projection", 1, stride, c_in, out)
            self.bn_projection = builder.bn(f"{name}/projection/bn", out)
        elif stride != 1 or c_in != out:
            raise ConfigError(f"Block {name} changes shape and needs a projection")

    def quant_layers(self) -> list[QuantConv2D]:
        layers = [self.conv1, self.conv2, self.conv3]
        if self.projection is not None:
            layers.append(self.projection)
        return layers

    def batch_norms(self) -> list[BatchNorm]:
        norms = [self.bn1, self.bn2, self.bn3]
        if self.bn_projection is not None:
            norms.append(self.bn_projection)
        return norms

    def __call__(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        h = ops.relu(self.bn1(self.conv1(x, ctx), ctx))
        h = ops.relu(self.bn2(self.conv2(h, ctx), ctx))
        h = self.bn3(self.conv3(h, ctx), ctx)
        shortcut = x
        if self.projection is not None and self.bn_projection is not None:
            shortcut = self.bn_projection(self.projection(x, ctx), ctx)
        return ops.relu(ops.add(h, shortcut))


class ResNet:
    def __init__(
        self,
        spec: ResNetSpec,
        quant_cfg: LayerQuantConfig,
        conv_init: QuantConv2D,
        bn_init: BatchNorm,
        blocks: list[BottleneckBlock],
        dense: QuantDense,
    ) -> None:
        self.spec = spec
        self.quant_cfg = quant_cfg
        self.conv_init = conv_init
        self.bn_init = bn_init
        self.blocks = blocks
        self.dense = dense

    def quant_layers(self) -> list[QuantLayer]:
        """Every Conv2D / Dense layer in build order"""
        layers: list[QuantLayer] = [self.conv_init]
        for block in self.blocks:
            layers.extend(block.quant_layers())
        layers.append(self.dense)
        return layers

    def batch_norms(self) -> list[BatchNorm]:
        norms = [self.bn_init]
        for block in self.blocks:
            norms.extend(block.batch_norms())
        return norms

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for layer in self.quant_layers():
            params.extend(layer.parameters())
        for bn in self.batch_norms():
            params.extend(bn.parameters())
        return params

    def projections(self) -> list[QuantConv2D]:
        return [b.projection for b in self.blocks if b.projection is not None]

    def attach_calibration(
        self, schedule: CalibrationSchedule, decay: float = DEFAULT_EMA_DECAY
    ) -> None:
        """Give every activation-quantized layer a fresh calibrator"""
        for layer in self.quant_layers():
            layer.attach_calibration(schedule, decay)

    def calibrators(self) -> list[ActivationCalibrator]:
        return [
            layer.calibrator
            for layer in self.quant_layers()
            if layer.calibrator is not None
        ]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def __call__(self, x: Array, ctx: ForwardContext) -> Tensor:
        return self.forward(x, ctx)

    def forward(self, x: Array, ctx: ForwardContext) -> Tensor:
        """NHWC images -> logits"""
        h = x if isinstance(x, Tensor) else Tensor(x)
        h = ops.relu(self.bn_init(self.conv_init(h, ctx), ctx))
        if self.spec.use_max_pool:
            h = ops.max_pool(h, MAX_POOL_WINDOW, MAX_POOL_STRIDE, Padding.SAME)
        for block in self.blocks:
            h = block(h, ctx)
        return self.dense(ops.global_avg_pool(h), ctx)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameters, running statistics and calibration state by name"""
        arrays: dict[str, np.ndarray] = {p.name: p.data for p in self.parameters()}
        for p in self.parameters():
            if p.has_momentum:
                arrays[f"{p.name}/momentum"] = p.momentum_buf
        for bn in self.batch_norms():
            arrays[f"{bn.name}/running_mean"] = bn.running_mean
            arrays[f"{bn.name}/running_var"] = bn.running_var
        for cal in self.calibrators():
            for key, value in cal.snapshot().items():
                arrays[f"{cal.name}/calibration/{key}"] = value
        return arrays

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            p.data = np.array(arrays[p.name], dtype=p.data.dtype)
            momentum = arrays.get(f"{p.name}/momentum")
            p.momentum_buf = (
                np.array(momentum, dtype=p.data.dtype)
                if momentum is not None
                else np.zeros_like(p.data)
            )
        for bn in self.batch_norms():
            bn.running_mean[...] = arrays[f"{bn.name}/running_mean"]
            bn.running_var[...] = arrays[f"{bn.name}/running_var"]
        for cal in self.calibrators():
            prefix = f"{cal.name}/calibration/"
            cal.restore(
                {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
            )


def build_resnet(
    spec: ResNetSpec,
    quant_cfg: LayerQuantConfig,
    seed: int = 0,
    dtype: np.dtype = np.dtype(np.float32),  # type: ignore[type-arg]
    materialize: bool = True,
) -> ResNet:
    """Build the model; initial parameters depend only on (spec, seed, dtype).

    ``materialize=False`` builds a shape-only model (zero-stride parameter
    views) for counting and costing.
    """
    if not spec.multiplier_in_sweep_range:
        logger.warning(
            "Filter multiplier %s is outside the sweep range [0.5, 2.0]",
            spec.filter_multiplier,
        )

    builder = _Builder(quant_cfg, np.random.default_rng(seed), np.dtype(dtype), materialize)
    c = spec.filter_multiplier

    init_width = scaled_widths([spec.init_conv.width], c)[0]
    conv_init = builder.conv(
        FIRST_LAYER,
        spec.init_conv.kernel,
        spec.init_conv.stride,
        3,
        init_width,
        input_signedness=Signedness.SIGNED,
    )
    bn_init = builder.bn(f"{FIRST_LAYER}/bn", init_width)

    mids = scaled_widths(spec.base_widths, c)
    outs = scaled_widths([w * spec.expansion for w in spec.base_widths], c)

    blocks: list[BottleneckBlock] = []
    c_in = init_width
    for g, (n_blocks, mid, out) in enumerate(zip(spec.block_group_sizes, mids, outs)):
        for b in range(n_blocks):
            stride = 2 if (g > 0 and b == 0) else 1
            blocks.append(
                BottleneckBlock(
                    f"group{g + 1}/block{b + 1}",
                    c_in,
                    mid,
                    out,
                    stride,
                    project=(b == 0),
                    builder=builder,
                )
            )
            c_in = out

    dense = QuantDense(
        LAST_LAYER,
        c_in,
        spec.num_classes,
        quant_cfg.bits_for(LAST_LAYER),
        Signedness.UNSIGNED,
        builder.rng,
        builder.dtype,
        materialize,
    )
    model = ResNet(spec, quant_cfg, conv_init, bn_init, blocks, dense)
    logger.debug(
        "Built %s (c=%s): %d blocks, %d parameters",
        spec.name,
        c,
        len(blocks),
        count_params(model),
    )
    return model


def count_params(model: ResNet) -> int:
    """Scalar parameters across convs, dense kernel and bias, BN scale and shift"""
    return sum(p.size for p in model.parameters())


def _conv_shape(
    layer: QuantConv2D, in_h: int, in_w: int, batch: int
) -> tuple[LayerShape, int, int]:
    out_h = output_size(in_h, layer.kernel_size, layer.stride, layer.padding)
    out_w = output_size(in_w, layer.kernel_size, layer.stride, layer.padding)
    shape = LayerShape(
        name=layer.name,
        kind=LayerKind.CONV2D,
        batch=batch,
        kernel_h=layer.kernel_size,
        kernel_w=layer.kernel_size,
        out_w=out_w,
        out_h=out_h,
        c_in=layer.c_in,
        c_out=layer.out_channels,
        precision_bits=layer.weight_precision.cost_bits,
    )
    return shape, out_h, out_w


def _walk_layer_shapes(
    model: ResNet, resolution: int, batch: int
) -> Iterator[LayerShape]:
    shape, h, w = _conv_shape(model.conv_init, resolution, resolution, batch)
    yield shape
    if model.spec.use_max_pool:
        h = output_size(h, MAX_POOL_WINDOW, MAX_POOL_STRIDE, Padding.SAME)
        w = output_size(w, MAX_POOL_WINDOW, MAX_POOL_STRIDE, Padding.SAME)

    for block in model.blocks:
        conv1, _, _ = _conv_shape(block.conv1, h, w, batch)
        conv2, out_h, out_w = _conv_shape(block.conv2, h, w, batch)
        conv3, _, _ = _conv_shape(block.conv3, out_h, out_w, batch)
        yield from (conv1, conv2, conv3)
        if block.projection is not None:
            projection, _, _ = _conv_shape(block.projection, h, w, batch)
            yield projection
        h, w = out_h, out_w

    yield LayerShape(
        name=model.dense.name,
        kind=LayerKind.DENSE,
        batch=batch,
        c_in=model.dense.c_in,
        c_out=model.dense.out_channels,
        precision_bits=model.dense.weight_precision.cost_bits,
    )


def layer_shapes(
    model: ResNet, input_resolution: Optional[int] = None, batch: int = 1
) -> list[LayerShape]:
    """One LayerShape per Conv2D / Dense layer, in build order"""
    resolution = input_resolution or model.spec.input_resolution
    try:
        return list(_walk_layer_shapes(model, resolution, batch))
    except ValidationError as e:
        raise CostModelError(f"Model {model.spec.name} cannot be costed: {e}") from e


def export_manifest(
    model: ResNet,
    input_resolution: Optional[int] = None,
    batch: int = 1,
    preset: Optional[str] = None,
) -> LayerManifest:
    resolution = input_resolution or model.spec.input_resolution
    return LayerManifest(
        arch=model.spec.name,
        multiplier=model.spec.filter_multiplier,
        preset=preset,
        input_resolution=resolution,
        layers=layer_shapes(model, resolution, batch),
    )


def params_by_multiplier(
    spec: ResNetSpec, multipliers: Sequence[float]
) -> list[tuple[float, int]]:
    """Parameter count at each filter multiplier, from shape-only builds"""
    counts = []
    for c in multipliers:
        model = build_resnet(spec.with_multiplier(c), LayerQuantConfig(), materialize=False)
        counts.append((c, count_params(model)))
    return counts
