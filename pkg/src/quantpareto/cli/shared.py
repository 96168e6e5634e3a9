import logging
from contextlib import contextmanager
from typing import Iterator

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from quantpareto.core.errors import QuantParetoError

# Exit code of a command that failed at runtime (usage errors exit 1).
RUNTIME_FAILURE = 2

app = typer.Typer(
    name="quantpareto",
    help="Quantization-aware training with compute/memory cost models and Pareto tradeoffs",
    no_args_is_help=True,
)
console = Console()
err_console = Console(stderr=True)


@app.callback()
def configure(
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Log training and sweep progress"
    ),
) -> None:
    """Install the rich log handler on the root logger"""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@contextmanager
def runtime_errors() -> Iterator[None]:
    """Report library failures and exit with the runtime failure code"""
    try:
        yield
    except QuantParetoError as e:
        err_console.print(f"[red]Error: {escape(str(e))}[/red]")
        raise typer.Exit(RUNTIME_FAILURE)
