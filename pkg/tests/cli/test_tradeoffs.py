"""
Tests for the pareto command.
"""

import csv

import pytest
from typer.testing import CliRunner

from quantpareto.cli.shared import app
from quantpareto.cli.tradeoffs import curves_path
from quantpareto.runner.models import RunStatus
from quantpareto.runner.results import write_results


@pytest.fixture
def runner():
    return CliRunner()


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class TestParetoCommand:
    def test_two_point_file(self, runner, make_result, tmp_path):
        results = write_results(
            [make_result("bfloat16", 1.0, top1=0.70), make_result("8bit", 1.0, top1=0.72)],
            tmp_path / "results.csv",
        )
        out = tmp_path / "frontier.csv"
        result = runner.invoke(app, ["pareto", "--results", str(results), "--out", str(out)])

        assert result.exit_code == 0, result.output
        rows = read_rows(out)
        assert [r["label"] for r in rows] == ["8bit_c1"]
        assert float(rows[0]["cost"]) == 0.5
        assert len(read_rows(curves_path(out))) == 2

    def test_full_grid_with_budget(self, runner, make_result, tmp_path):
        rows = [
            make_result(preset, c, top1=top1)
            for c, accuracies in ((0.5, (0.55, 0.50, 0.56, 0.57)), (1.0, (0.68, 0.66, 0.69, 0.70)))
            for preset, top1 in zip(("4bit", "4bit_first_last_8", "8bit", "bfloat16"), accuracies)
        ]
        rows.append(make_result("4bit", 2.0, status=RunStatus.FAILED))
        results = write_results(rows, tmp_path / "results.csv")
        out = tmp_path / "plots" / "frontier.csv"

        result = runner.invoke(
            app,
            ["pareto", "-r", str(results), "--cost", "quadratic", "-o", str(out), "--budget", "0.5"],
        )
        assert result.exit_code == 0, result.output
        assert "Recommendation" in result.output
        assert "Quantization Loss" in result.output
        costs = [float(r["cost"]) for r in read_rows(out)]
        assert costs == sorted(costs)

    def test_loss_metric(self, runner, make_result, tmp_path):
        results = write_results(
            [make_result("bfloat16", 1.0, eval_logloss=1.0), make_result("8bit", 1.0, eval_logloss=1.3)],
            tmp_path / "results.csv",
        )
        out = tmp_path / "frontier.csv"
        result = runner.invoke(
            app, ["pareto", "-r", str(results), "-o", str(out), "--metric", "eval_logloss"]
        )
        assert result.exit_code == 0
        rows = read_rows(out)
        assert [float(r["metric"]) for r in rows] == [1.3, 1.0]

    def test_no_completed_runs(self, runner, make_result, tmp_path):
        results = write_results([make_result(status=RunStatus.FAILED)], tmp_path / "results.csv")
        result = runner.invoke(app, ["pareto", "-r", str(results), "-o", str(tmp_path / "f.csv")])
        assert result.exit_code == 2
        assert "No completed runs" in result.output

    def test_missing_results_file(self, runner, tmp_path):
        result = runner.invoke(app, ["pareto", "-r", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "f.csv")])
        assert result.exit_code != 0
