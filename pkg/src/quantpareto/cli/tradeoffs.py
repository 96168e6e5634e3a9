from pathlib import Path
from typing import Optional

import typer

from quantpareto.cli.shared import app, console, runtime_errors
from quantpareto.pareto.curves import (
    points_from_results,
    quantization_loss,
    setting_curves,
    write_curves_csv,
    write_frontier_csv,
)
from quantpareto.pareto.frontier import pareto_frontier, recommend
from quantpareto.pareto.models import CostAxis, Direction, Metric
from quantpareto.runner.display import ResultsDisplayFormatter
from quantpareto.runner.results import read_results


def curves_path(frontier_path: Path) -> Path:
    return frontier_path.with_suffix(".curves.csv")


@app.command()
def pareto(
    results_path: Path = typer.Option(
        ..., "--results", "-r", exists=True, dir_okay=False, help="Results CSV of a sweep"
    ),
    axis: CostAxis = typer.Option(CostAxis.LINEAR, "--cost", help="Cost axis"),
    out: Path = typer.Option(..., "--out", "-o", dir_okay=False, help="Frontier CSV"),
    metric: Metric = typer.Option(Metric.TOP1, "--metric", help="Quality metric"),
    direction: Optional[Direction] = typer.Option(
        None, "--direction", help="Override the metric's default direction"
    ),
    budget: Optional[float] = typer.Option(
        None, "--budget", min=0.0, help="Recommend the best point within this cost"
    ),
    reference_multiplier: float = typer.Option(
        1.0, "--reference-multiplier", help="Baseline run the cost axis is normalised to"
    ),
) -> None:
    """Pareto frontier and per-setting tradeoff curves of a sweep"""

    direction = direction or metric.default_direction
    formatter = ResultsDisplayFormatter(console)

    with runtime_errors():
        rows = read_results(results_path)
        points = points_from_results(
            rows, axis, metric, direction, reference_multiplier
        )
        frontier = pareto_frontier(points)
        write_frontier_csv(frontier, out, direction)
        write_curves_csv(setting_curves(points), curves_path(out), direction)
        pick = recommend(points, budget) if budget is not None else None

    formatter.display_frontier(frontier, axis, metric, direction)
    formatter.display_quantization_loss(quantization_loss(rows))
    if budget is not None:
        formatter.display_recommendation(pick, budget, metric, direction)
    console.print(f"[green]Frontier written to {out}, curves to {curves_path(out)}[/green]")
