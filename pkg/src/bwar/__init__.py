"""Backpressure with adaptive redundancy on the cell-partitioned mobility model."""
from ._jit import backend_name
from .core import (ALL_VARIANTS, VARIANT_NAMES, ConfigError, Kind, NodeState, Packet,
                   SimConfig, Variant, partner, recommended_nodes, validate_config)
from .engine import Simulation, run
from .metrics import MetricsReport, SweepResult, estimate_stability_threshold, write_csv

__all__ = [
    "ALL_VARIANTS", "VARIANT_NAMES", "ConfigError", "Kind", "NodeState", "Packet", "SimConfig",
    "Variant", "partner", "recommended_nodes", "validate_config", "Simulation", "run",
    "MetricsReport", "SweepResult", "estimate_stability_threshold", "write_csv", "backend_name",
]
__version__ = "0.1.0"
