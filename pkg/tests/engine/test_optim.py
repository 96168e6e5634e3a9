"""
Tests for SGD with momentum and the learning-rate schedule.
"""

import math

import numpy as np
import pytest

from quantpareto.core.errors import ConfigError
from quantpareto.engine.optim import CosineWarmupSchedule, scaled_base_lr, sgd_momentum_step
from quantpareto.engine.tensor import Parameter


def with_grad(value, grad):
    p = Parameter(np.array([value]))
    p.grad = np.array([grad])
    return p


class TestSgdMomentumStep:
    """In-place parameter updates"""

    def test_plain_sgd(self):
        p = with_grad(1.0, 2.0)
        sgd_momentum_step([p], lr=0.1, momentum=0.0)
        assert p.data[0] == pytest.approx(0.8)

    def test_momentum_accumulates(self):
        p = with_grad(0.0, 1.0)
        sgd_momentum_step([p], lr=1.0, momentum=0.9)
        sgd_momentum_step([p], lr=1.0, momentum=0.9)
        # v = 1, then v = 0.9 + 1 = 1.9
        assert p.momentum_buf[0] == pytest.approx(1.9)
        assert p.data[0] == pytest.approx(-2.9)

    def test_weight_decay(self):
        p = with_grad(2.0, 0.0)
        sgd_momentum_step([p], lr=0.5, momentum=0.0, weight_decay=0.1)
        assert p.data[0] == pytest.approx(1.9)

    def test_rejects_non_positive_lr(self):
        with pytest.raises(ConfigError, match="positive"):
            sgd_momentum_step([with_grad(1.0, 1.0)], lr=0.0)


class TestCosineWarmupSchedule:
    """Linear warmup then cosine decay"""

    @pytest.fixture
    def schedule(self):
        return CosineWarmupSchedule(base_lr=0.1, total_steps=100, warmup_fraction=0.05)

    def test_warmup_steps(self, schedule):
        assert schedule.warmup_steps == 5

    def test_linear_warmup(self, schedule):
        assert [schedule.lr(s) for s in range(5)] == pytest.approx([0.02, 0.04, 0.06, 0.08, 0.1])

    def test_peak_after_warmup(self, schedule):
        assert schedule.lr(5) == pytest.approx(0.1)

    def test_cosine_midpoint(self, schedule):
        mid = 5 + 95 / 2
        assert schedule.lr(int(mid)) == pytest.approx(
            0.05 * (1 + math.cos(math.pi * (int(mid) - 5) / 95))
        )

    def test_monotone_decay(self, schedule):
        lrs = [schedule.lr(s) for s in range(5, 100)]
        assert all(a >= b for a, b in zip(lrs, lrs[1:]))

    def test_no_warmup(self):
        schedule = CosineWarmupSchedule(base_lr=0.2, total_steps=10, warmup_fraction=0.0)
        assert schedule.lr(0) == pytest.approx(0.2)

    def test_scaled_base_lr(self):
        assert scaled_base_lr(256) == pytest.approx(0.1)
        assert scaled_base_lr(64) == pytest.approx(0.025)
