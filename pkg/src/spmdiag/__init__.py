"""Locate and explain performance bottlenecks in SPMD programs from per-process profiles."""

__version__ = "0.1.0"
