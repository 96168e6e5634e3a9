import csv
import io
from pathlib import Path
from typing import Optional

import typer

from quantpareto.cli.shared import app, console, runtime_errors
from quantpareto.core.models import CostModelKind, QuantSettingPreset
from quantpareto.cost.cost_model import normalized_cost
from quantpareto.cost.manifest import load_manifest, save_manifest
from quantpareto.model.resnet import build_resnet, export_manifest, params_by_multiplier
from quantpareto.model.spec import (
    ARCHITECTURES,
    FULL_SWEEP_MULTIPLIERS,
    LayerQuantConfig,
    spec_for,
)
from quantpareto.runner.display import ResultsDisplayFormatter

COST_COLUMNS = ["layer", "kind", "bits", "compute", "memory_bits", "compute_share"]


@app.command()
def cost(
    manifest_path: Path = typer.Option(
        ..., "--manifest", exists=True, dir_okay=False, help="Layer-shape manifest JSON"
    ),
    model: CostModelKind = typer.Option(
        CostModelKind.LINEAR, "--model", "-m", help="Cost model"
    ),
    table: bool = typer.Option(
        False, "--table", help="Rich table of the costliest layers instead of CSV"
    ),
) -> None:
    """Per-layer and total cost of a manifest, normalised to its 16-bit baseline"""

    with runtime_errors():
        manifest = load_manifest(manifest_path)
        report = normalized_cost(manifest.layers, model)

    if table:
        ResultsDisplayFormatter(console).display_cost_report(report)
        return

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=COST_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(report.to_rows())
    typer.echo(buffer.getvalue(), nl=False)
    assert report.compute_ratio is not None and report.memory_ratio is not None
    typer.echo(f"# compute_ratio={float(report.compute_ratio)!r} ({report.compute_ratio})")
    typer.echo(f"# memory_ratio={float(report.memory_ratio)!r} ({report.memory_ratio})")


@app.command()
def manifest(
    arch: str = typer.Option("resnet50", "--arch", "-a", help="Architecture name"),
    multiplier: float = typer.Option(1.0, "--multiplier", "-c", help="Filter multiplier"),
    preset: QuantSettingPreset = typer.Option(
        QuantSettingPreset.BASELINE, "--preset", "-p", help="Quantization setting"
    ),
    resolution: Optional[int] = typer.Option(
        None, "--resolution", help="Input resolution (architecture default if omitted)"
    ),
    out: Path = typer.Option(..., "--out", "-o", dir_okay=False, help="Output JSON"),
) -> None:
    """Export the layer-shape manifest of an architecture for the cost command"""

    if arch not in ARCHITECTURES:
        raise typer.BadParameter(
            f"unknown architecture {arch!r}; choose from {', '.join(ARCHITECTURES)}",
            param_hint="--arch",
        )

    with runtime_errors():
        model = build_resnet(
            spec_for(arch, multiplier),
            LayerQuantConfig.from_preset(preset),
            materialize=False,
        )
        path = save_manifest(
            export_manifest(model, resolution, preset=preset.value), out
        )

    console.print(f"[green]Manifest with {len(model.quant_layers())} layers written to {path}[/green]")


@app.command()
def params(
    arch: str = typer.Option("resnet50", "--arch", "-a", help="Architecture name"),
    multipliers: Optional[list[float]] = typer.Option(
        None, "--multiplier", "-c", help="Filter multiplier (repeatable)"
    ),
) -> None:
    """Parameter count across filter multipliers"""

    if arch not in ARCHITECTURES:
        raise typer.BadParameter(
            f"unknown architecture {arch!r}; choose from {', '.join(ARCHITECTURES)}",
            param_hint="--arch",
        )

    with runtime_errors():
        counts = params_by_multiplier(
            spec_for(arch), multipliers or list(FULL_SWEEP_MULTIPLIERS)
        )

    ResultsDisplayFormatter(console).display_params(counts, arch)
