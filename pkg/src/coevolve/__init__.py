"""Closed-loop co-evolution of geometry diagrams, reasoning problems and a solver."""

__version__ = "0.1.0"
