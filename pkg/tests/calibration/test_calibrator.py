"""
Tests for the activation-bound calibration lifecycle.
"""

import numpy as np
import pytest

from quantpareto.calibration.calibrator import (
    ActivationCalibrator,
    activations_quantized,
    maybe_freeze,
    update_ema,
    weight_bounds,
)
from quantpareto.calibration.models import (
    Calibrating,
    CalibrationSchedule,
    EmaTracker,
    Frozen,
)
from quantpareto.core.errors import CalibrationError, ConfigError


@pytest.fixture
def schedule():
    return CalibrationSchedule(freeze_step=5, total_steps=20)


class TestUpdateEma:
    """EMA of per-channel max(abs(x))"""

    def test_first_observation_sets_ema(self):
        batch = np.array([[1.0, -3.0], [-2.0, 0.5]])
        tracker = update_ema(EmaTracker(), batch)
        np.testing.assert_array_equal(tracker.per_channel_ema, [2.0, 3.0])
        assert tracker.observations == 1

    def test_decay_step(self):
        tracker = EmaTracker(per_channel_ema=np.array([2.0]), decay=0.9, observations=1)
        updated = update_ema(tracker, np.array([[3.0]]))
        assert updated.per_channel_ema[0] == pytest.approx(2.1)

    def test_hand_computed_sequence(self):
        tracker = EmaTracker(decay=0.5)
        for m in (4.0, 2.0, 6.0):
            tracker = update_ema(tracker, np.array([[m], [-m / 2]]))
        # 4 -> 0.5*4 + 0.5*2 = 3 -> 0.5*3 + 0.5*6 = 4.5
        assert tracker.per_channel_ema[0] == pytest.approx(4.5)
        assert tracker.observations == 3

    def test_converges_on_constant_stream(self):
        batch = np.array([[0.5, -7.0, 1.0]])
        tracker = update_ema(EmaTracker(), np.zeros((1, 3)) + 100.0)
        for _ in range(400):
            tracker = update_ema(tracker, batch)
        np.testing.assert_allclose(tracker.per_channel_ema, [0.5, 7.0, 1.0])

    def test_stays_within_observed_range(self):
        rng = np.random.default_rng(0)
        tracker = EmaTracker()
        maxima = []
        for _ in range(50):
            batch = rng.normal(size=(8, 4, 4, 3)) * rng.uniform(0.1, 5.0)
            maxima.append(np.max(np.abs(batch), axis=(0, 1, 2)))
            tracker = update_ema(tracker, batch)
        observed = np.array(maxima)
        assert np.all(tracker.per_channel_ema >= observed.min(axis=0) - 1e-12)
        assert np.all(tracker.per_channel_ema <= observed.max(axis=0) + 1e-12)

    def test_reduces_all_non_channel_axes(self):
        batch = np.zeros((2, 3, 3, 2))
        batch[1, 2, 0, 1] = -9.0
        tracker = update_ema(EmaTracker(), batch)
        np.testing.assert_array_equal(tracker.per_channel_ema, [0.0, 9.0])

    def test_empty_batch(self):
        with pytest.raises(CalibrationError, match="empty"):
            update_ema(EmaTracker(), np.zeros((0, 3)))

    def test_channel_count_change(self):
        tracker = update_ema(EmaTracker(), np.ones((2, 3)))
        with pytest.raises(CalibrationError, match="Channel count"):
            update_ema(tracker, np.ones((2, 4)))

    def test_invalid_decay(self):
        with pytest.raises(ConfigError):
            EmaTracker(decay=1.0)


class TestSchedule:
    """Freeze step placement"""

    def test_default_fraction(self):
        assert CalibrationSchedule.from_fraction(1000).freeze_step == 200

    def test_rounds_half_away(self):
        assert CalibrationSchedule.from_fraction(25, 0.1).freeze_step == 3

    def test_freeze_must_precede_end(self):
        with pytest.raises(ValueError):
            CalibrationSchedule(freeze_step=10, total_steps=10)

    def test_degenerate_fraction(self):
        with pytest.raises(ConfigError):
            CalibrationSchedule.from_fraction(3, 0.1)


class TestMaybeFreeze:
    """Calibrating -> Frozen at step N"""

    def _calibrating(self, value):
        return Calibrating(
            EmaTracker(per_channel_ema=np.array([value]), observations=3)
        )

    def test_before_freeze_step(self, schedule):
        state = self._calibrating(2.1)
        assert maybe_freeze(state, 4, schedule) is state
        assert not activations_quantized(state)

    def test_at_freeze_step(self, schedule):
        state = maybe_freeze(self._calibrating(2.1), 5, schedule)
        assert isinstance(state, Frozen)
        np.testing.assert_array_equal(state.bounds, [2.1])
        assert activations_quantized(state)

    def test_idempotent_after_freeze(self, schedule):
        frozen = maybe_freeze(self._calibrating(2.1), 5, schedule)
        for step in range(6, 20):
            assert maybe_freeze(frozen, step, schedule) is frozen

    def test_fresh_tracker_not_quantized(self):
        assert not activations_quantized(Calibrating(EmaTracker()))

    def test_freeze_without_statistics(self, schedule):
        with pytest.raises(CalibrationError, match="No activation statistics"):
            maybe_freeze(Calibrating(EmaTracker()), 5, schedule)


class TestWeightBounds:
    """Per-output-channel max-abs"""

    def test_single_channel(self):
        assert weight_bounds(np.array([[0.1], [-3.0], [2.0]]))[0] == 3.0

    def test_two_channels(self):
        w = np.array([[1.0, 4.0], [-1.0, 0.5]])
        np.testing.assert_array_equal(weight_bounds(w), [1.0, 4.0])

    def test_matches_exhaustive_oracle(self):
        w = np.random.default_rng(1).normal(size=(3, 3, 5, 7))
        expected = [max(abs(v) for v in w[..., c].ravel()) for c in range(7)]
        np.testing.assert_array_equal(weight_bounds(w), expected)

    def test_all_zero_channel(self):
        np.testing.assert_array_equal(weight_bounds(np.zeros((4, 2))), [0.0, 0.0])

    def test_empty(self):
        with pytest.raises(CalibrationError):
            weight_bounds(np.zeros((0, 2)))


class TestActivationCalibrator:
    """Stateful lifecycle over a training run"""

    def test_lifecycle(self):
        schedule = CalibrationSchedule.from_fraction(500)
        calibrator = ActivationCalibrator("conv", schedule)
        rng = np.random.default_rng(7)

        freezes = []
        bounds_after = []
        for step in range(500):
            froze = calibrator.observe(rng.normal(size=(4, 3)) * (1 + step), step)
            if froze:
                freezes.append(step)
            assert calibrator.active == (step >= schedule.freeze_step)
            if calibrator.active:
                bounds_after.append(calibrator.bounds.copy())

        assert freezes == [100]
        assert calibrator.freeze_events == 1
        assert all(np.array_equal(b, bounds_after[0]) for b in bounds_after)

    def test_freeze_uses_ema_before_freeze_step(self):
        schedule = CalibrationSchedule(freeze_step=2, total_steps=4)
        calibrator = ActivationCalibrator("conv", schedule, decay=0.5)
        calibrator.observe(np.array([[2.0]]), 0)
        calibrator.observe(np.array([[4.0]]), 1)
        calibrator.observe(np.array([[100.0]]), 2)
        np.testing.assert_allclose(calibrator.bounds, [3.0])

    def test_snapshot_restore(self, schedule):
        calibrator = ActivationCalibrator("conv", schedule)
        calibrator.observe(np.array([[1.0, 2.0]]), 0)
        clone = ActivationCalibrator("conv", schedule)
        clone.restore(calibrator.snapshot())
        np.testing.assert_array_equal(clone.ema, calibrator.ema)
        assert not clone.active

        for step in range(1, 6):
            calibrator.observe(np.array([[1.0, 2.0]]), step)
        clone.restore(calibrator.snapshot())
        assert clone.active
        np.testing.assert_array_equal(clone.bounds, calibrator.bounds)
