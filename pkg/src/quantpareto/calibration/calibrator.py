"""
Activation bound calibration: EMA of per-channel max(abs(x)) during warmup,
frozen once at step N. Weight bounds are recomputed from the current weights on
every forward pass.
"""

import logging
from typing import Optional

import numpy as np

from quantpareto.calibration.models import (
    DEFAULT_EMA_DECAY,
    BoundsState,
    Calibrating,
    CalibrationSchedule,
    EmaTracker,
    Frozen,
)
from quantpareto.core.errors import CalibrationError

logger = logging.getLogger(__name__)


def _reduce_axes(ndim: int, channel_axis: int) -> tuple[int, ...]:
    axis = channel_axis % ndim
    return tuple(a for a in range(ndim) if a != axis)


def _per_channel_max_abs(x: np.ndarray, channel_axis: int) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 0:
        return np.abs(x).reshape(1).astype(np.float64)
    return np.max(np.abs(x), axis=_reduce_axes(x.ndim, channel_axis)).astype(
        np.float64
    )


def update_ema(
    tracker: EmaTracker, batch: np.ndarray, channel_axis: int = -1
) -> EmaTracker:
    """Fold one batch's per-channel max(abs(x)) into the EMA.

    The first observation sets the EMA directly; afterwards
    ema <- decay * ema + (1 - decay) * m.
    """
    batch = np.asarray(batch)
    if batch.size == 0:
        raise CalibrationError("Cannot calibrate on an empty batch")

    m = _per_channel_max_abs(batch, channel_axis)
    if tracker.observations == 0:
        ema = m
    else:
        if m.shape != tracker.per_channel_ema.shape:
            raise CalibrationError(
                f"Channel count changed from {tracker.per_channel_ema.size} to {m.size}"
            )
        ema = tracker.decay * tracker.per_channel_ema + (1.0 - tracker.decay) * m

    return EmaTracker(
        per_channel_ema=ema, decay=tracker.decay, observations=tracker.observations + 1
    )


def maybe_freeze(
    state: BoundsState, step: int, schedule: CalibrationSchedule
) -> BoundsState:
    """Freeze the current EMA into bounds once ``step`` reaches N"""
    if isinstance(state, Frozen):
        return state
    if step < schedule.freeze_step:
        return state
    if state.tracker.observations == 0:
        raise CalibrationError(f"No activation statistics collected by step {step}")
    return Frozen(bounds=state.tracker.per_channel_ema.copy())


def activations_quantized(state: BoundsState) -> bool:
    return isinstance(state, Frozen)


def weight_bounds(w: np.ndarray, out_channel_axis: int = -1) -> np.ndarray:
    """Per-output-channel max(abs(w)) over all other axes"""
    w = np.asarray(w)
    if w.size == 0:
        raise CalibrationError("Cannot compute bounds of an empty weight tensor")
    return _per_channel_max_abs(w, out_channel_axis)


class ActivationCalibrator:
    """
    Owns the calibration state of one activation quantizer.

    Single writer: only the training loop calls ``observe``.
    """

    def __init__(
        self,
        name: str,
        schedule: CalibrationSchedule,
        decay: float = DEFAULT_EMA_DECAY,
        channel_axis: int = -1,
    ) -> None:
        self.name = name
        self.schedule = schedule
        self.channel_axis = channel_axis
        self.state: BoundsState = Calibrating(EmaTracker(decay=decay))
        self.freeze_events = 0

    @property
    def active(self) -> bool:
        """Whether activations are quantized"""
        return activations_quantized(self.state)

    @property
    def bounds(self) -> Optional[np.ndarray]:
        return self.state.bounds if isinstance(self.state, Frozen) else None

    @property
    def ema(self) -> np.ndarray:
        if isinstance(self.state, Calibrating):
            return self.state.tracker.per_channel_ema
        return self.state.bounds

    def observe(self, x: np.ndarray, step: int) -> bool:
        """Advance the lifecycle for one training step.

        Returns True on the step that froze the bounds.
        """
        was_frozen = isinstance(self.state, Frozen)
        self.state = maybe_freeze(self.state, step, self.schedule)

        if isinstance(self.state, Calibrating):
            self.state = Calibrating(
                update_ema(self.state.tracker, x, self.channel_axis)
            )
            return False

        if was_frozen:
            return False

        self.freeze_events += 1
        logger.debug(
            "Froze activation bounds of %s at step %d (max bound %.4g)",
            self.name,
            step,
            float(np.max(self.state.bounds)),
        )
        return True

    def snapshot(self) -> dict[str, np.ndarray]:
        """Arrays that fully describe the state, for checkpoints"""
        if isinstance(self.state, Frozen):
            return {"frozen_bounds": self.state.bounds}
        tracker = self.state.tracker
        return {
            "ema": tracker.per_channel_ema,
            "observations": np.asarray([tracker.observations], dtype=np.int64),
        }

    def restore(self, arrays: dict[str, np.ndarray]) -> None:
        if "frozen_bounds" in arrays:
            self.state = Frozen(bounds=np.array(arrays["frozen_bounds"], dtype=np.float64))
            return
        decay = (
            self.state.tracker.decay
            if isinstance(self.state, Calibrating)
            else DEFAULT_EMA_DECAY
        )
        self.state = Calibrating(
            EmaTracker(
                per_channel_ema=np.array(arrays["ema"], dtype=np.float64),
                decay=decay,
                observations=int(arrays["observations"][0]),
            )
        )
