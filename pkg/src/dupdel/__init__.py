"""Duplication-deletion clique graph process: simulation, exact limits, comparison."""

__version__ = "0.1.0"
