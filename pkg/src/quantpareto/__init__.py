"""Quantization-aware training and cost/Pareto tradeoff analysis."""

__version__ = "0.1.0"
