"""
Tradeoff curves from sweep results: points on a chosen cost axis, one series
per quantization setting, and CSV writers for external plotting.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from quantpareto.core.errors import ParetoError
from quantpareto.core.models import QuantSettingPreset
from quantpareto.pareto.models import (
    CostAxis,
    Direction,
    Frontier,
    Metric,
    TradeoffPoint,
)
from quantpareto.runner.models import RunResult

logger = logging.getLogger(__name__)

POINT_COLUMNS = ["label", "preset", "multiplier", "cost", "metric"]


def _absolute_cost(row: RunResult, axis: CostAxis) -> int:
    if axis == CostAxis.LINEAR:
        return row.cost_linear
    if axis == CostAxis.QUADRATIC:
        return row.cost_quadratic
    return row.mem_bits


def _own_ratio(row: RunResult, axis: CostAxis) -> float:
    if axis == CostAxis.LINEAR:
        return row.cost_linear_ratio
    if axis == CostAxis.QUADRATIC:
        return row.cost_quadratic_ratio
    return row.mem_ratio


def reference_run(
    rows: Sequence[RunResult], reference_multiplier: float = 1.0
) -> Optional[RunResult]:
    """The completed Baseline run at the reference multiplier, if any.

    Runs defined by an explicit layer config carry no preset and never qualify.
    """
    for row in rows:
        if (
            row.ok
            and row.preset == QuantSettingPreset.BASELINE
            and row.multiplier == reference_multiplier
        ):
            return row
    return None


def points_from_results(
    rows: Sequence[RunResult],
    axis: CostAxis = CostAxis.LINEAR,
    metric: Metric = Metric.TOP1,
    direction: Optional[Direction] = None,
    reference_multiplier: float = 1.0,
) -> list[TradeoffPoint]:
    """Tradeoff points of the completed runs.

    Costs are normalised to the Baseline run at ``reference_multiplier`` so
    every multiplier shares one axis; without that run each point falls back
    to its ratio against its own 16-bit baseline.
    """
    direction = direction or metric.default_direction
    completed = [row for row in rows if row.ok]
    if not completed:
        raise ParetoError("No completed runs to build tradeoff points from")

    reference = reference_run(completed, reference_multiplier)
    if reference is None:
        logger.warning(
            "No Baseline run at multiplier %s; using per-run cost ratios",
            reference_multiplier,
        )

    points = []
    for row in completed:
        value = getattr(row, metric.value)
        if reference is not None:
            cost = _absolute_cost(row, axis) / _absolute_cost(reference, axis)
        else:
            cost = _own_ratio(row, axis)
        points.append(
            TradeoffPoint.from_metric(
                cost,
                value,
                row.run_id,
                direction,
                preset=row.setting,
                multiplier=row.multiplier,
                run_id=row.run_id,
            )
        )
    return points


def setting_curves(points: Sequence[TradeoffPoint]) -> dict[str, list[TradeoffPoint]]:
    """One ascending-cost series per quantization setting"""
    order = {preset.value: i for i, preset in enumerate(QuantSettingPreset)}
    curves: dict[str, list[TradeoffPoint]] = {}
    for point in points:
        curves.setdefault(point.preset or "unlabelled", []).append(point)
    return {
        preset: sorted(series, key=lambda p: (p.cost, p.label))
        for preset, series in sorted(
            curves.items(), key=lambda item: (order.get(item[0], len(order)), item[0])
        )
    }


@dataclass(frozen=True)
class QuantizationLoss:
    """Top-1 of a quantized setting minus Baseline top-1 at one multiplier"""

    multiplier: float
    preset: QuantSettingPreset
    top1: float
    baseline_top1: float

    @property
    def delta(self) -> float:
        return self.top1 - self.baseline_top1


def quantization_loss(rows: Sequence[RunResult]) -> list[QuantizationLoss]:
    baselines = {
        row.multiplier: row.top1
        for row in rows
        if row.ok and row.preset == QuantSettingPreset.BASELINE and row.top1 is not None
    }
    losses = [
        QuantizationLoss(
            multiplier=row.multiplier,
            preset=row.preset,
            top1=row.top1,
            baseline_top1=baselines[row.multiplier],
        )
        for row in rows
        if row.ok
        and row.top1 is not None
        and row.preset is not None
        and row.preset != QuantSettingPreset.BASELINE
        and row.multiplier in baselines
    ]
    return sorted(losses, key=lambda q: (q.multiplier, q.preset.value))


def _point_row(point: TradeoffPoint, direction: Direction) -> dict[str, object]:
    return {
        "label": point.label,
        "preset": point.preset or "",
        "multiplier": "" if point.multiplier is None else repr(point.multiplier),
        "cost": repr(point.cost),
        "metric": repr(point.metric(direction)),
    }


def write_frontier_csv(frontier: Frontier, path: Path, direction: Direction) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=POINT_COLUMNS)
        writer.writeheader()
        for point in frontier.points:
            writer.writerow(_point_row(point, direction))
    return path


def write_curves_csv(
    curves: dict[str, list[TradeoffPoint]], path: Path, direction: Direction
) -> Path:
    """Long-format series: one row per point, grouped by setting"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=["series", *POINT_COLUMNS])
        writer.writeheader()
        for series, points in curves.items():
            for point in points:
                writer.writerow({"series": series, **_point_row(point, direction)})
    return path
