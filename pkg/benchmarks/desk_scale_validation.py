"""
Desk-scale validation suite for quantpareto

Usage:
    python desk_scale_validation.py --all
    python desk_scale_validation.py --test training
    python desk_scale_validation.py --test sweep --workers 4
    python desk_scale_validation.py --test training --reference 0.91

Uses CIFAR-10 when QUANTPARETO_DATA_ROOT points at the binary files,
otherwise well-separated synthetic clusters.
"""

import argparse
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

try:
    from quantpareto.core.models import QuantSettingPreset
    from quantpareto.pareto.curves import points_from_results
    from quantpareto.pareto.frontier import dominates, pareto_frontier
    from quantpareto.runner.config import ExperimentConfig, SweepGrid
    from quantpareto.runner.data import DATA_ROOT_ENV
    from quantpareto.runner.results import ResultsStore
    from quantpareto.runner.sweep import sweep
    from quantpareto.runner.training import Trainer
except ImportError as e:
    print(f"Error importing quantpareto modules: {e}")
    print("Make sure you're running from the project root and the package is installed")
    exit(1)

console = Console()

# Quantized presets may trail the Baseline by at most this much top-1.
ACCURACY_TOLERANCE = 0.02
MIN_LOSS_REDUCTION = 5.0


@dataclass
class PresetOutcome:
    preset: QuantSettingPreset
    top1: float
    initial_loss: float
    final_loss: float
    seconds: float

    @property
    def loss_reduction(self) -> float:
        return self.initial_loss / max(self.final_loss, 1e-12)


def desk_config(steps: int, seed: int, directory: Path) -> Dict[str, Any]:
    """MiniResNet on CIFAR-10 when available, synthetic clusters otherwise"""
    if os.environ.get(DATA_ROOT_ENV):
        dataset: Dict[str, Any] = {"kind": "cifar10_binary"}
        batch_size = 128
    else:
        dataset = {
            "kind": "synthetic_clusters",
            "num_classes": 10,
            "resolution": 16,
            "separation": 3.0,
        }
        batch_size = 64
    return {
        "model": {"arch": "mini_resnet", "multiplier": 1.0},
        "train": {"steps": steps, "batch_size": batch_size, "seed": seed, "log_every": 200},
        "dataset": dataset,
        "output": {"directory": str(directory), "checkpoint": False},
    }


class DeskScaleValidator:
    """Runs the desk-scale training and sweep acceptance checks"""

    def __init__(self, steps: int, seed: int, workers: int, reference: Optional[float]):
        self.steps = steps
        self.seed = seed
        self.workers = workers
        self.reference = reference
        self.console = console
        self.workdir = Path(tempfile.mkdtemp(prefix="quantpareto-desk-"))

    def _config(self, preset: QuantSettingPreset) -> ExperimentConfig:
        data = desk_config(self.steps, self.seed, self.workdir / preset.value)
        data["quant"] = {"preset": preset.value}
        return ExperimentConfig.model_validate(data)

    def test_training(self) -> Dict[str, Any]:
        """Every preset trains; quantized presets stay close to the Baseline"""

        self.console.print(Panel.fit("[bold]Training per preset[/bold]", border_style="blue"))
        outcomes: List[PresetOutcome] = []
        for preset in QuantSettingPreset:
            started = time.perf_counter()
            with self.console.status(f"Training {preset.value}..."):
                outcome = Trainer(self._config(preset)).run()
            losses = outcome.trace.losses
            tail = losses[-20:]
            outcomes.append(
                PresetOutcome(
                    preset=preset,
                    top1=outcome.result.top1 or 0.0,
                    initial_loss=losses[0],
                    final_loss=sum(tail) / len(tail),
                    seconds=time.perf_counter() - started,
                )
            )

        by_preset = {o.preset: o for o in outcomes}
        reference = self.reference
        if reference is None:
            reference = by_preset[QuantSettingPreset.BASELINE].top1
            self.console.print(
                f"[yellow]No pinned reference accuracy; using this run's Baseline "
                f"top-1 {reference:.4f}[/yellow]"
            )

        problems = []
        for preset in (QuantSettingPreset.EIGHT_BIT, QuantSettingPreset.FOUR_BIT_FIRST_LAST_8):
            if by_preset[preset].top1 < reference - ACCURACY_TOLERANCE:
                problems.append(
                    f"{preset.value} top-1 {by_preset[preset].top1:.4f} is more than "
                    f"{ACCURACY_TOLERANCE:.0%} below {reference:.4f}"
                )
        for o in outcomes:
            if o.loss_reduction < MIN_LOSS_REDUCTION:
                problems.append(
                    f"{o.preset.value} loss fell only {o.loss_reduction:.1f}x "
                    f"({o.initial_loss:.3f} -> {o.final_loss:.3f})"
                )

        self._display_training_results(outcomes, reference, problems)
        return {
            "passed": not problems,
            "reference_top1": reference,
            "problems": problems,
            "outcomes": [o.__dict__ | {"preset": o.preset.value} for o in outcomes],
        }

    def test_sweep(self) -> Dict[str, Any]:
        """3x4 grid, frontier sanity and bit-exact determinism"""

        self.console.print(Panel.fit("[bold]3x4 sweep and frontier[/bold]", border_style="blue"))
        base = ExperimentConfig.model_validate(
            desk_config(self.steps, self.seed, self.workdir / "sweep")
        )
        grid = SweepGrid(base=base)

        with self.console.status("Sweeping (first pass)..."):
            first = sweep(grid, ResultsStore(self.workdir / "sweep_a.csv"), self.workers)
        with self.console.status("Sweeping (repeat)..."):
            second = sweep(grid, ResultsStore(self.workdir / "sweep_b.csv"), self.workers)

        problems = []
        if len(first) != 12:
            problems.append(f"Expected 12 rows, got {len(first)}")
        failed = [r.run_id for r in first if not r.ok]
        if failed:
            problems.append(f"Failed runs: {', '.join(failed)}")

        for a, b in zip(first, second):
            for field in ("train_logloss", "eval_logloss", "top1"):
                if getattr(a, field) != getattr(b, field):
                    problems.append(f"{a.run_id} {field} differs between repeats")

        points = points_from_results(first)
        frontier = pareto_frontier(points)
        baseline = QuantSettingPreset.BASELINE.value
        for p in frontier.points:
            if p.preset == baseline and any(
                dominates(q, p) for q in points if q.preset != baseline
            ):
                problems.append(f"Dominated Baseline point {p.label} on the frontier")

        table = Table(title="Frontier", box=box.ROUNDED)
        table.add_column("Point", style="cyan")
        table.add_column("Cost", justify="right")
        table.add_column("Top-1", justify="right", style="green")
        for p in frontier.points:
            table.add_row(p.label, f"{p.cost:.4f}", f"{p.accuracy:.4f}")
        self.console.print(table)
        self._display_problems(problems)

        return {"passed": not problems, "problems": problems, "frontier": frontier.labels}

    def run_all_tests(self) -> Dict[str, Any]:
        results = {"training": self.test_training(), "sweep": self.test_sweep()}
        results["passed"] = all(r["passed"] for r in results.values())
        return results

    def _display_training_results(
        self, outcomes: List[PresetOutcome], reference: float, problems: List[str]
    ) -> None:
        table = Table(title=f"Presets (reference top-1 {reference:.4f})", box=box.ROUNDED)
        table.add_column("Preset", style="cyan")
        table.add_column("Top-1", justify="right", style="green")
        table.add_column("Initial loss", justify="right")
        table.add_column("Final loss", justify="right")
        table.add_column("Reduction", justify="right")
        table.add_column("Time", justify="right")
        for o in outcomes:
            table.add_row(
                o.preset.value,
                f"{o.top1:.4f}",
                f"{o.initial_loss:.4f}",
                f"{o.final_loss:.4f}",
                f"{o.loss_reduction:.1f}x",
                f"{o.seconds:.0f}s",
            )
        self.console.print(table)
        self._display_problems(problems)

    def _display_problems(self, problems: List[str]) -> None:
        if not problems:
            self.console.print("[green]All checks passed[/green]")
            return
        for problem in problems:
            self.console.print(f"[red]  • {problem}[/red]")


def main():
    """Main CLI interface"""

    parser = argparse.ArgumentParser(description="Desk-scale validation for quantpareto")
    test_group = parser.add_mutually_exclusive_group()
    test_group.add_argument("--all", action="store_true", help="Run all checks")
    test_group.add_argument("--test", choices=["training", "sweep"], help="Run one check")
    parser.add_argument("--steps", type=int, default=2000, help="Training steps per run")
    parser.add_argument("--seed", type=int, default=0, help="Seed shared by every run")
    parser.add_argument("--workers", type=int, default=1, help="Parallel sweep runs")
    parser.add_argument(
        "--reference", type=float, help="Pinned Baseline top-1 to compare quantized presets with"
    )
    parser.add_argument("--output", help="Save results to JSON file")
    args = parser.parse_args()

    validator = DeskScaleValidator(args.steps, args.seed, args.workers, args.reference)

    try:
        if args.test == "training":
            results = validator.test_training()
        elif args.test == "sweep":
            results = validator.test_sweep()
        else:
            results = validator.run_all_tests()

        if args.output:
            import json

            with open(args.output, "w") as f:
                json.dump(results, f, indent=2, default=str)
            console.print(f"[green]Results saved to {args.output}[/green]")

        if results.get("passed"):
            console.print("\n[green]Desk-scale validation passed[/green]")
            return 0
        console.print("\n[red]Desk-scale validation found issues[/red]")
        return 1

    except Exception as e:
        console.print(f"[red]Error during validation: {e}[/red]")
        return 1


if __name__ == "__main__":
    exit(main())
