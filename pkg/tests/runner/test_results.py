"""
Tests for RunResult rows and the append-only results store.
"""

import json
from concurrent.futures import ThreadPoolExecutor

import pytest

from quantpareto.core.errors import QuantParetoError
from quantpareto.runner.models import RESULT_COLUMNS, RunResult, RunStatus
from quantpareto.runner.results import ResultsStore, read_results, sidecar_path, write_results


class TestRunResult:
    def test_documented_columns_lead(self):
        assert RESULT_COLUMNS[:12] == (
            "run_id", "preset", "multiplier", "params", "cost_linear_ratio",
            "cost_quadratic_ratio", "mem_bits", "train_logloss", "eval_logloss",
            "gen_gap", "top1", "status",
        )

    def test_row_round_trip_is_lossless(self, make_result):
        result = make_result("8bit", 0.62, top1=0.1 + 0.2, train_logloss=1 / 3, eval_logloss=2 / 3)
        assert RunResult.from_row(result.to_row()) == result

    def test_failed_row_round_trip(self, make_result):
        result = make_result("4bit", 2.0, status=RunStatus.FAILED)
        row = result.to_row()
        assert row["top1"] == "" and row["status"] == "failed"
        assert RunResult.from_row(row) == result

    def test_gap_must_match(self, make_result):
        data = make_result().model_dump()
        data["gen_gap"] = 0.5
        with pytest.raises(ValueError, match="gen_gap"):
            RunResult.model_validate(data)

    def test_completed_run_needs_metrics(self, make_result):
        data = make_result().model_dump()
        data["top1"] = None
        with pytest.raises(ValueError, match="missing metrics"):
            RunResult.model_validate(data)


class TestResultsStore:
    def test_append_and_read(self, make_result, tiny_config, tmp_path):
        store = ResultsStore(tmp_path / "out" / "results.csv")
        rows = [make_result("8bit", 1.0), make_result("4bit", 1.0, status=RunStatus.FAILED)]
        store.append(rows[0], tiny_config)
        store.append(rows[1], tiny_config, error="TrainingDivergedError: nan")
        assert store.read() == rows

        header = store.path.read_text().splitlines()[0]
        assert header == ",".join(RESULT_COLUMNS)

        entries = [json.loads(line) for line in sidecar_path(store.path).read_text().splitlines()]
        assert [e["run_id"] for e in entries] == ["8bit_c1", "4bit_c1"]
        assert entries[1]["error"] == "TrainingDivergedError: nan"
        assert entries[0]["config"]["train"]["seed"] == 0

    def test_concurrent_appends_keep_whole_rows(self, make_result, tmp_path):
        store = ResultsStore(tmp_path / "results.csv")
        rows = [make_result("8bit", 0.5 + i / 100, run_id=f"r{i}") for i in range(40)]
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(store.append, rows))
        assert sorted(r.run_id for r in store.read()) == sorted(r.run_id for r in rows)

    def test_write_results(self, make_result, tmp_path):
        rows = [make_result(), make_result("8bit")]
        assert read_results(write_results(rows, tmp_path / "all.csv")) == rows

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("run_id,preset\nx,8bit\n")
        with pytest.raises(QuantParetoError, match="lacks columns"):
            read_results(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(QuantParetoError, match="Failed to read"):
            read_results(tmp_path / "absent.csv")
