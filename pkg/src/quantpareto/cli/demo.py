from typing import Optional

import numpy as np
import typer

from quantpareto.cli.shared import app, console, runtime_errors
from quantpareto.core.models import Precision
from quantpareto.quant.quantizer import quantization_staircase
from quantpareto.quant.rounding import DEFAULT_ROUNDING, RoundingMode
from quantpareto.runner.display import ResultsDisplayFormatter

# Sample vector spans past the bound on both sides so clipping shows up.
SAMPLE_SPAN = 1.25
SAMPLE_POINTS = 11


def sample_values(bound: float, signed: bool) -> list[float]:
    lo = -SAMPLE_SPAN * bound if signed else -0.25 * bound
    return [float(v) for v in np.linspace(lo, SAMPLE_SPAN * bound, SAMPLE_POINTS)]


@app.command("quantize-demo")
def quantize_demo(
    bits: int = typer.Option(4, "--bits", "-b", min=2, max=16, help="Bit width"),
    signed: bool = typer.Option(True, "--signed/--unsigned", help="Integer range"),
    bound: float = typer.Option(1.0, "--bound", help="Clipping bound"),
    values: Optional[list[float]] = typer.Option(
        None, "--value", help="Value to quantize (repeatable; sample vector if omitted)"
    ),
    rounding: RoundingMode = typer.Option(
        DEFAULT_ROUNDING, "--rounding", help="Tie-breaking rule"
    ),
) -> None:
    """Walk sample values through scale, clip, round and rescale"""

    precision = Precision.signed(bits) if signed else Precision.unsigned(bits)
    with runtime_errors():
        rows = quantization_staircase(
            values or sample_values(bound, signed), bound, precision, rounding
        )
    ResultsDisplayFormatter(console).display_staircase(rows, precision, bound)
