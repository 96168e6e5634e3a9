from pathlib import Path
from typing import Optional

import typer
from rich.progress import BarColumn, Progress, TextColumn

from quantpareto.cli.shared import app, console, runtime_errors
from quantpareto.runner.config import load_config, load_grid
from quantpareto.runner.display import ResultsDisplayFormatter
from quantpareto.runner.models import RunResult
from quantpareto.runner.results import ResultsStore
from quantpareto.runner.sweep import sweep as run_sweep
from quantpareto.runner.training import train as run_training

RESULTS_FILE = "results.csv"


@app.command()
def train(
    config_path: Path = typer.Option(
        ..., "--config", "-c", exists=True, dir_okay=False, help="Experiment config JSON"
    ),
) -> None:
    """Train one quantization-aware model and report its metrics"""

    with runtime_errors():
        config = load_config(config_path)
        result = run_training(config)
        if config.output.results_csv is not None:
            ResultsStore(config.output.results_csv).append(result, config)

    ResultsDisplayFormatter(console).display_run_result(result)


@app.command()
def sweep(
    grid_path: Path = typer.Option(
        ..., "--grid", "-g", exists=True, dir_okay=False, help="Sweep grid JSON"
    ),
    out: Path = typer.Option(
        ..., "--out", "-o", file_okay=False, help="Directory for results and run artifacts"
    ),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Parallel runs"),
    results_name: Optional[str] = typer.Option(
        None, "--results-name", help=f"Results CSV file name (default {RESULTS_FILE})"
    ),
) -> None:
    """Train every filter multiplier x quantization setting cell of a grid"""

    with runtime_errors():
        grid = load_grid(grid_path)
        base = grid.base.model_copy(
            update={"output": grid.base.output.model_copy(update={"directory": out})}
        )
        grid = grid.model_copy(update={"base": base})
        store = ResultsStore(out / (results_name or RESULTS_FILE))
        total = len(grid.expand())

        with Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task("Sweeping", total=total)

            def advance(result: RunResult) -> None:
                progress.advance(task)
                if not result.ok:
                    console.print(f"[yellow]Run {result.run_id} failed[/yellow]")

            results = run_sweep(grid, store, workers=workers, on_result=advance)

    ResultsDisplayFormatter(console).display_results(results)
    console.print(f"[green]Results written to {store.path}[/green]")
