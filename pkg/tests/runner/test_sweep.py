"""
Tests for the multiplier x preset sweep.
"""

import pytest

from quantpareto.core.errors import ConfigError, TrainingDivergedError
from quantpareto.core.models import QuantSettingPreset
from quantpareto.pareto.curves import points_from_results
from quantpareto.pareto.frontier import dominates, pareto_frontier
from quantpareto.runner.config import SweepGrid
from quantpareto.runner.models import RunStatus
from quantpareto.runner.results import ResultsStore, sidecar_path
from quantpareto.runner.sweep import sweep


@pytest.fixture
def grid(tiny_config):
    return SweepGrid(base=tiny_config, multipliers=[0.5, 1.0, 2.0])


class TestSweep:
    def test_runs_every_cell_in_grid_order(self, grid, make_result, tmp_path, mocker):
        def fake_train(config):
            return make_result(config.quant.preset.value, config.model.multiplier)

        seen = []
        store = ResultsStore(tmp_path / "results.csv")
        fake = mocker.patch("quantpareto.runner.sweep.train", side_effect=fake_train)
        results = sweep(grid, store, on_result=seen.append)

        assert len(results) == 12
        assert [r.run_id for r in results] == [c.run_id for c in grid.expand()]
        assert len(store.read()) == 12
        assert seen == results
        assert fake.call_count == 12

    def test_failed_run_is_recorded_and_sweep_continues(
        self, grid, make_result, tmp_path, mocker
    ):
        def flaky_train(config):
            if config.run_id == "4bit_c1":
                raise TrainingDivergedError("Loss became nan at step 12")
            return make_result(config.quant.preset.value, config.model.multiplier)

        store = ResultsStore(tmp_path / "results.csv")
        mocker.patch("quantpareto.runner.sweep.train", side_effect=flaky_train)
        results = sweep(grid, store)

        failed = [r for r in results if not r.ok]
        assert [r.run_id for r in failed] == ["4bit_c1"]
        assert failed[0].status == RunStatus.FAILED
        assert failed[0].params > 0
        assert len(results) == 12
        assert "TrainingDivergedError" in sidecar_path(store.path).read_text()

    def test_invalid_worker_count(self, grid):
        with pytest.raises(ConfigError, match="workers"):
            sweep(grid, workers=0)


@pytest.mark.slow
class TestDeskSweep:
    """Real 3x4 sweep on the tiny synthetic task"""

    def test_end_to_end_and_deterministic(self, grid, tmp_path):
        first = sweep(grid, ResultsStore(tmp_path / "a.csv"))
        second = sweep(grid, ResultsStore(tmp_path / "b.csv"), workers=2)

        assert len(first) == 12
        assert all(r.ok for r in first)
        for a, b in zip(first, second):
            for field in ("train_logloss", "eval_logloss", "top1", "initial_loss"):
                assert getattr(a, field) == getattr(b, field), (a.run_id, field)

        points = points_from_results(first)
        frontier = pareto_frontier(points)
        for p in frontier.points:
            if p.preset == QuantSettingPreset.BASELINE.value:
                assert not any(
                    dominates(q, p) for q in points if q.preset != QuantSettingPreset.BASELINE.value
                )
