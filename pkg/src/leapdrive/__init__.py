"""Dual-process closed-loop driving agent on a deterministic 2D traffic simulator."""

__version__ = "0.1.0"
