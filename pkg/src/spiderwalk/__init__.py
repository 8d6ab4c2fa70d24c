"""Random walks and Brownian motion on a spider with N legs."""

from .core import (
    ORIGIN,
    LegWeights,
    SpiderPath,
    SpiderState,
    WalkPath,
    enumerate_states,
    local_time,
    spider_distance,
    step,
    visit_counts,
)
from .errors import InvariantViolation, SeriesCapError, SnapGuardError
from .stats import EmpiricalCdf, RngStream, ks_distance, phi, proportion_ci

__version__ = "0.1.0"

__all__ = [
    "ORIGIN",
    "EmpiricalCdf",
    "InvariantViolation",
    "LegWeights",
    "RngStream",
    "SeriesCapError",
    "SnapGuardError",
    "SpiderPath",
    "SpiderState",
    "WalkPath",
    "enumerate_states",
    "ks_distance",
    "local_time",
    "phi",
    "proportion_ci",
    "spider_distance",
    "step",
    "visit_counts",
]
