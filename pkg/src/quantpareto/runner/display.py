from typing import Optional, Sequence

from rich.box import SIMPLE
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from quantpareto.core.models import Precision
from quantpareto.cost.models import CostReport
from quantpareto.pareto.curves import QuantizationLoss
from quantpareto.pareto.models import CostAxis, Direction, Frontier, Metric, TradeoffPoint
from quantpareto.quant.models import StaircaseRow
from quantpareto.runner.models import RunResult


def _fmt(value: Optional[float], digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


class ResultsDisplayFormatter:
    """Rich tables for run results, cost reports, frontiers and the staircase"""

    def __init__(self, console: Console) -> None:
        self.console = console

    def display_run_result(self, result: RunResult) -> None:
        """Single-run summary panel"""
        status = "[green]ok[/green]" if result.ok else "[red]failed[/red]"
        self.console.print(
            Panel(
                f"[bold]{result.setting}[/bold] c={result.multiplier:g} | {status}\n"
                f"top-1 [cyan]{_fmt(result.top1)}[/cyan] | "
                f"train log-loss {_fmt(result.train_logloss)} | "
                f"eval log-loss {_fmt(result.eval_logloss)} | "
                f"gap {_fmt(result.gen_gap)}\n"
                f"{result.params:,} params | linear cost {result.cost_linear_ratio:.4f} | "
                f"quadratic cost {result.cost_quadratic_ratio:.4f} | "
                f"{result.mem_bits:,} weight bits | {result.wall_clock_s:.1f}s",
                title=f"Run {result.run_id}",
                border_style="blue",
            )
        )

    def display_results(self, results: Sequence[RunResult]) -> None:
        table = Table(title="Sweep Results", header_style="bold cyan", box=SIMPLE)
        table.add_column("Run", style="cyan")
        table.add_column("Preset", style="blue")
        table.add_column("c", justify="right")
        table.add_column("Params", justify="right")
        table.add_column("Linear", justify="right")
        table.add_column("Quadratic", justify="right")
        table.add_column("Top-1", justify="right", style="green")
        table.add_column("Eval loss", justify="right")
        table.add_column("Gap", justify="right")
        table.add_column("Status")

        for r in results:
            table.add_row(
                r.run_id,
                r.setting,
                f"{r.multiplier:g}",
                f"{r.params:,}",
                f"{r.cost_linear_ratio:.4f}",
                f"{r.cost_quadratic_ratio:.4f}",
                _fmt(r.top1),
                _fmt(r.eval_logloss),
                _fmt(r.gen_gap),
                "[green]ok[/green]" if r.ok else "[red]failed[/red]",
            )
        self.console.print(table)

    def display_cost_report(self, report: CostReport, top: int = 10) -> None:
        """Totals plus the most expensive layers"""
        table = Table(
            title=f"{report.kind.value.title()} Cost (top {top} layers)",
            header_style="bold cyan",
            box=SIMPLE,
        )
        table.add_column("Layer", style="cyan")
        table.add_column("Bits", justify="right")
        table.add_column("Compute", justify="right")
        table.add_column("Share", justify="right")
        table.add_column("Memory bits", justify="right")

        ranked = sorted(report.layers, key=lambda layer: layer.compute, reverse=True)
        for layer in ranked[:top]:
            table.add_row(
                layer.name,
                str(layer.shape.precision_bits),
                f"{layer.compute:,}",
                f"{layer.compute / report.total_compute:.1%}",
                f"{layer.memory_bits:,}",
            )
        self.console.print(table)

        ratio = (
            f" | ratio vs {report.reference}: [bold]{float(report.compute_ratio):.4f}[/bold]"
            if report.compute_ratio is not None
            else ""
        )
        self.console.print(
            f"Total compute {report.total_compute:,} | memory {report.total_memory_bits:,} bits{ratio}"
        )

    def display_frontier(
        self,
        frontier: Frontier,
        axis: CostAxis,
        metric: Metric,
        direction: Direction,
    ) -> None:
        table = Table(
            title=f"Pareto Frontier ({axis.value} cost vs {metric.value})",
            header_style="bold cyan",
            box=SIMPLE,
        )
        table.add_column("Point", style="cyan")
        table.add_column("Preset", style="blue")
        table.add_column("c", justify="right")
        table.add_column("Cost", justify="right")
        table.add_column(metric.value, justify="right", style="green")

        for point in frontier.points:
            table.add_row(
                point.label,
                point.preset or "-",
                "-" if point.multiplier is None else f"{point.multiplier:g}",
                f"{point.cost:.4f}",
                f"{point.metric(direction):.4f}",
            )
        self.console.print(table)

    def display_recommendation(
        self,
        point: Optional[TradeoffPoint],
        budget: float,
        metric: Metric,
        direction: Direction,
    ) -> None:
        if point is None:
            self.console.print(f"[yellow]No frontier point fits a cost budget of {budget}[/yellow]")
            return
        self.console.print(
            Panel(
                f"Use [bold]{point.preset}[/bold] at c={point.multiplier:g}: "
                f"cost {point.cost:.4f} <= {budget}, {metric.value} {point.metric(direction):.4f}",
                title="Recommendation",
                border_style="green",
            )
        )

    def display_quantization_loss(self, losses: Sequence[QuantizationLoss]) -> None:
        if not losses:
            return
        table = Table(title="Quantization Loss vs Baseline", header_style="bold cyan", box=SIMPLE)
        table.add_column("c", justify="right")
        table.add_column("Preset", style="blue")
        table.add_column("Top-1", justify="right")
        table.add_column("Baseline", justify="right")
        table.add_column("Delta", justify="right")
        for q in losses:
            color = "green" if q.delta >= 0 else "red"
            table.add_row(
                f"{q.multiplier:g}",
                q.preset.value,
                f"{q.top1:.4f}",
                f"{q.baseline_top1:.4f}",
                f"[{color}]{q.delta:+.4f}[/{color}]",
            )
        self.console.print(table)

    def display_staircase(
        self, rows: Sequence[StaircaseRow], precision: Precision, bound: float
    ) -> None:
        table = Table(
            title=f"{precision} quantization, bound {bound:g}",
            header_style="bold cyan",
            box=SIMPLE,
        )
        for column in ("Input", "Scaled", "Clipped", "Rounded", "Rescaled", "Error"):
            table.add_column(column, justify="right")
        for row in rows:
            table.add_row(
                f"{row.input:.6f}",
                f"{row.scaled:.6f}",
                f"{row.clipped:.6f}",
                str(row.rounded),
                f"{row.rescaled:.6f}",
                f"{row.error:+.6f}",
            )
        self.console.print(table)

    def display_params(self, counts: Sequence[tuple[float, int]], arch: str) -> None:
        table = Table(title=f"{arch} parameters by filter multiplier", header_style="bold cyan", box=SIMPLE)
        table.add_column("c", justify="right")
        table.add_column("Parameters", justify="right")
        table.add_column("Millions", justify="right", style="green")
        for c, count in counts:
            table.add_row(f"{c:g}", f"{count:,}", f"{count / 1e6:.2f}M")
        self.console.print(table)
