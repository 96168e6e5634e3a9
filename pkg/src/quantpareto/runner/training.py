"""
Quantization-aware training loop and evaluation
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from quantpareto.calibration.models import CalibrationSchedule
from quantpareto.core.errors import DatasetError, TrainingDivergedError
from quantpareto.core.models import CostModelKind
from quantpareto.cost.cost_model import normalized_cost
from quantpareto.cost.manifest import save_manifest
from quantpareto.engine.checkpoint import save_checkpoint
from quantpareto.engine.ops import log_softmax, softmax_cross_entropy
from quantpareto.engine.optim import (
    CosineWarmupSchedule,
    scaled_base_lr,
    sgd_momentum_step,
)
from quantpareto.engine.tensor import Tape
from quantpareto.model.layers import ForwardContext, QuantHook, QuantMode
from quantpareto.model.resnet import (
    ResNet,
    build_resnet,
    count_params,
    export_manifest,
    layer_shapes,
)
from quantpareto.quant.rounding import DEFAULT_ROUNDING, RoundingMode
from quantpareto.runner.config import ExperimentConfig
from quantpareto.runner.data import ArrayDataset, iterate_in_order, load_dataset
from quantpareto.runner.models import RunResult, RunStatus

logger = logging.getLogger(__name__)

# Non-finite losses before this step are skipped as early transients.
DIVERGENCE_GRACE_STEPS = 10
CHECKPOINT_NAME = "checkpoint"
MANIFEST_NAME = "layers.manifest.json"


@dataclass(frozen=True)
class EvalMetrics:
    top1: float
    logloss: float


@dataclass
class TrainingTrace:
    """What happened during one run, for inspection and tests"""

    losses: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)
    skipped_steps: list[int] = field(default_factory=list)
    freeze_step: Optional[int] = None
    bounds_at_freeze: dict[str, np.ndarray] = field(default_factory=dict)
    final_bounds: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class TrainingOutcome:
    result: RunResult
    trace: TrainingTrace
    model: ResNet


def classification_metrics(logits: np.ndarray, labels: np.ndarray) -> EvalMetrics:
    """Top-1 accuracy and mean cross-entropy of one set of logits"""
    if labels.size == 0:
        raise DatasetError("Cannot score an empty batch")
    log_probs = log_softmax(logits.astype(np.float64))
    logloss = float(-log_probs[np.arange(labels.size), labels].mean())
    top1 = float((logits.argmax(axis=1) == labels).mean())
    return EvalMetrics(top1=top1, logloss=logloss)


def evaluate(
    model: ResNet,
    dataset: ArrayDataset,
    batch_size: int = 256,
    mode: QuantMode = QuantMode.FAKE,
    rounding: RoundingMode = DEFAULT_ROUNDING,
) -> EvalMetrics:
    """Top-1 and log-loss in eval mode (running BN stats, frozen bounds)"""
    if len(dataset) == 0:
        raise DatasetError("Cannot evaluate on an empty stream")

    ctx = ForwardContext(training=False, mode=mode, rounding=rounding)
    correct = 0
    nll = 0.0
    for images, labels in iterate_in_order(dataset, batch_size):
        logits = model(images, ctx).data
        log_probs = log_softmax(logits.astype(np.float64))
        nll += float(-log_probs[np.arange(labels.size), labels].sum())
        correct += int((logits.argmax(axis=1) == labels).sum())
    return EvalMetrics(top1=correct / len(dataset), logloss=nll / len(dataset))


def cost_fields(model: ResNet) -> dict[str, object]:
    """Parameter count and cost-model fields of a RunResult"""
    shapes = layer_shapes(model, model.spec.input_resolution, batch=1)
    linear = normalized_cost(shapes, CostModelKind.LINEAR)
    quadratic = normalized_cost(shapes, CostModelKind.QUADRATIC)
    assert linear.compute_ratio is not None and linear.memory_ratio is not None
    assert quadratic.compute_ratio is not None
    return {
        "params": count_params(model),
        "cost_linear_ratio": float(linear.compute_ratio),
        "cost_quadratic_ratio": float(quadratic.compute_ratio),
        "mem_bits": linear.total_memory_bits,
        "cost_linear": linear.total_compute,
        "cost_quadratic": quadratic.total_compute,
        "mem_ratio": float(linear.memory_ratio),
    }


def describe_failure(config: ExperimentConfig) -> RunResult:
    """Result row of a run that did not complete; costs come from a shape-only build"""
    model = build_resnet(
        config.resnet_spec(), config.quant.layer_config(), materialize=False
    )
    return RunResult(
        run_id=config.run_id,
        preset=config.quant.setting_preset,
        multiplier=config.model.multiplier,
        status=RunStatus.FAILED,
        config_digest=config.digest(),
        **cost_fields(model),  # type: ignore[arg-type]
    )


class Trainer:
    """Runs one experiment: QAT with the calibration schedule, then evaluation"""

    def __init__(
        self, config: ExperimentConfig, hooks: Sequence[QuantHook] = ()
    ) -> None:
        self.config = config
        self.hooks = list(hooks)

    def build_model(self) -> ResNet:
        cfg = self.config
        model = build_resnet(cfg.resnet_spec(), cfg.quant.layer_config(), seed=cfg.train.seed)
        schedule = CalibrationSchedule.from_fraction(
            cfg.train.steps, cfg.calibration.freeze_fraction
        )
        model.attach_calibration(schedule, cfg.calibration.decay)
        return model

    def lr_schedule(self) -> CosineWarmupSchedule:
        train = self.config.train
        return CosineWarmupSchedule(
            base_lr=train.lr or scaled_base_lr(train.batch_size),
            total_steps=train.steps,
            warmup_fraction=train.warmup_fraction,
        )

    def run(self) -> TrainingOutcome:
        cfg = self.config
        train = cfg.train
        started = time.perf_counter()

        model = self.build_model()
        schedule = self.lr_schedule()
        freeze_step = CalibrationSchedule.from_fraction(
            train.steps, cfg.calibration.freeze_fraction
        ).freeze_step
        splits = load_dataset(cfg.dataset, train.seed)
        stream = splits.train_stream(train.batch_size, train.seed)
        trace = TrainingTrace(freeze_step=freeze_step)

        logger.info(
            "Training %s: %s c=%s, %d steps, freeze at step %d",
            cfg.run_id,
            cfg.resnet_spec().name,
            cfg.model.multiplier,
            train.steps,
            freeze_step,
        )

        for step, (images, labels) in enumerate(stream.batches(train.steps)):
            ctx = ForwardContext(
                step=step,
                training=True,
                mode=cfg.quant.mode,
                rounding=cfg.quant.rounding,
                hooks=self.hooks,
            )
            with Tape() as tape:
                loss = softmax_cross_entropy(model(images, ctx), labels)
            value = loss.item()

            if step == freeze_step:
                trace.bounds_at_freeze = _bounds_snapshot(model)

            if not np.isfinite(value):
                if step >= DIVERGENCE_GRACE_STEPS:
                    raise TrainingDivergedError(
                        f"Loss became {value} at step {step} of run {cfg.run_id} "
                        f"(lr {schedule.lr(step):.4g})"
                    )
                logger.warning("Skipping non-finite loss at step %d", step)
                trace.skipped_steps.append(step)
                continue

            lr = schedule.lr(step)
            model.zero_grad()
            tape.backward(loss)
            sgd_momentum_step(model.parameters(), lr, train.momentum, train.weight_decay)

            trace.losses.append(value)
            trace.learning_rates.append(lr)
            if step % train.log_every == 0 or step == train.steps - 1:
                logger.info("step %d/%d loss %.4f lr %.4g", step, train.steps, value, lr)

        trace.final_bounds = _bounds_snapshot(model)

        train_metrics = evaluate(
            model,
            splits.train.head(train.train_eval_examples),
            train.eval_batch_size,
            cfg.quant.mode,
            cfg.quant.rounding,
        )
        eval_metrics = evaluate(
            model, splits.eval, train.eval_batch_size, cfg.quant.mode, cfg.quant.rounding
        )

        result = RunResult(
            run_id=cfg.run_id,
            preset=cfg.quant.setting_preset,
            multiplier=cfg.model.multiplier,
            train_logloss=train_metrics.logloss,
            eval_logloss=eval_metrics.logloss,
            gen_gap=eval_metrics.logloss - train_metrics.logloss,
            top1=eval_metrics.top1,
            status=RunStatus.OK,
            initial_loss=trace.losses[0] if trace.losses else None,
            wall_clock_s=time.perf_counter() - started,
            config_digest=cfg.digest(),
            **cost_fields(model),  # type: ignore[arg-type]
        )
        logger.info(
            "Finished %s: top1 %.4f, eval log-loss %.4f, gap %.4f",
            cfg.run_id,
            eval_metrics.top1,
            eval_metrics.logloss,
            result.gen_gap,
        )

        if cfg.output.checkpoint:
            self._write_artifacts(model, result, train.steps)
        return TrainingOutcome(result=result, trace=trace, model=model)

    def _write_artifacts(self, model: ResNet, result: RunResult, step: int) -> None:
        directory = self.config.output.directory
        save_checkpoint(
            directory,
            CHECKPOINT_NAME,
            model.state_arrays(),
            metadata={
                "step": step,
                "run_id": result.run_id,
                "config_digest": result.config_digest,
            },
        )
        save_manifest(
            export_manifest(model, preset=self.config.quant.setting_label),
            directory / MANIFEST_NAME,
        )
        (directory / "config.json").write_text(
            self.config.model_dump_json(indent=2), encoding="utf-8"
        )


def _bounds_snapshot(model: ResNet) -> dict[str, np.ndarray]:
    return {
        cal.name: cal.bounds.copy()
        for cal in model.calibrators()
        if cal.bounds is not None
    }


def train(config: ExperimentConfig) -> RunResult:
    """Run one experiment and return its result row"""
    return Trainer(config).run().result
