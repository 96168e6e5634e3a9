from typing import Callable, Optional

import pytest

from quantpareto.core.models import QuantSettingPreset
from quantpareto.runner.models import RunResult, RunStatus

# Own-baseline compute ratios of the homogeneous presets.
LINEAR_RATIOS = {"4bit": 0.25, "4bit_first_last_8": 0.3, "8bit": 0.5, "bfloat16": 1.0}


@pytest.fixture
def make_result() -> Callable[..., RunResult]:
    """Builds a plausible RunResult; absolute costs scale with c^2"""

    def _make(
        preset: str = "bfloat16",
        multiplier: float = 1.0,
        top1: Optional[float] = 0.7,
        train_logloss: float = 0.9,
        eval_logloss: float = 1.1,
        status: RunStatus = RunStatus.OK,
        run_id: Optional[str] = None,
    ) -> RunResult:
        ratio = LINEAR_RATIOS[preset]
        full = int(1_000_000 * multiplier**2)
        ok = status == RunStatus.OK
        return RunResult(
            run_id=run_id or f"{preset}_c{multiplier:g}",
            preset=QuantSettingPreset(preset),
            multiplier=multiplier,
            params=int(25_000 * multiplier**2),
            cost_linear_ratio=ratio,
            cost_quadratic_ratio=ratio**2,
            mem_bits=int(full * ratio),
            train_logloss=train_logloss if ok else None,
            eval_logloss=eval_logloss if ok else None,
            gen_gap=eval_logloss - train_logloss if ok else None,
            top1=top1 if ok else None,
            status=status,
            cost_linear=int(full * ratio),
            cost_quadratic=int(full * ratio**2),
            mem_ratio=ratio,
            config_digest="0" * 16,
        )

    return _make
