"""Analysis package for comparing defender strategies."""

from .sweep import SweepRow, SweepTable, sweep_gamma

__all__ = ["SweepRow", "SweepTable", "sweep_gamma"]
