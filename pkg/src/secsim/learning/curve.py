"""Convergence-curve row shared by learners and the experiment runner."""

from typing import NamedTuple


class CurveRow(NamedTuple):
    wall_seconds: float
    round_or_update: int
    metric_name: str
    mean: float
    stddev: float


CURVE_COLUMNS = ("wall_seconds", "round_or_update", "metric_name", "mean", "stddev")
