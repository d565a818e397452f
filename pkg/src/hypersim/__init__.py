"""Simulation-based bounded model checking for two-trace invariance hyperproperties."""

__version__ = "0.1.0"
