import sys

import click

from quantpareto.cli.shared import app

# Exit code for unknown commands, unknown flags and bad option values.
USAGE_ERROR = 1


def run() -> None:
    """Console entry point: 0 success, 1 usage error, 2 runtime failure"""
    try:
        code = app(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(USAGE_ERROR)
    except click.Abort:
        click.echo("Aborted!", err=True)
        sys.exit(USAGE_ERROR)
    sys.exit(code if isinstance(code, int) else 0)
