"""
Pareto dominance and frontier extraction
"""

from typing import Optional, Sequence

from quantpareto.core.errors import ParetoError
from quantpareto.pareto.models import Frontier, TradeoffPoint


def dominates(a: TradeoffPoint, b: TradeoffPoint) -> bool:
    """a is no worse than b on both axes and strictly better on one"""
    no_worse = a.cost <= b.cost and a.accuracy >= b.accuracy
    strictly_better = a.cost < b.cost or a.accuracy > b.accuracy
    return no_worse and strictly_better


def pareto_frontier(points: Sequence[TradeoffPoint]) -> Frontier:
    """Non-dominated points sorted by cost.

    Sort by (cost, -accuracy, label) and keep each point that beats the best
    accuracy seen so far. Exact duplicates collapse to the smallest label.
    """
    if not points:
        raise ParetoError("Cannot compute a frontier of an empty point set")
    labels = [p.label for p in points]
    if len(set(labels)) != len(labels):
        raise ParetoError("Tradeoff point labels must be unique")

    ordered = sorted(points, key=lambda p: (p.cost, -p.accuracy, p.label))
    frontier: list[TradeoffPoint] = []
    for point in ordered:
        if not frontier or point.accuracy > frontier[-1].accuracy:
            frontier.append(point)
    return Frontier(points=frontier)


def recommend(
    points: Sequence[TradeoffPoint], budget: float
) -> Optional[TradeoffPoint]:
    """Most accurate frontier point costing at most ``budget``"""
    affordable = [p for p in pareto_frontier(points).points if p.cost <= budget]
    return affordable[-1] if affordable else None
