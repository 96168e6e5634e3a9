"""
Pareto tradeoff analysis over cost and accuracy.
"""

from .frontier import dominates, pareto_frontier, recommend
from .models import CostAxis, Direction, Frontier, Metric, TradeoffPoint

__all__ = [
    "CostAxis",
    "Direction",
    "Frontier",
    "Metric",
    "TradeoffPoint",
    "dominates",
    "pareto_frontier",
    "recommend",
]
