from .shared import app, console

from . import costing, demo, experiments, main, tradeoffs

__all__ = ["app", "console", "costing", "demo", "experiments", "main", "tradeoffs"]

if __name__ == "__main__":
    app()
