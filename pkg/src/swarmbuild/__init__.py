"""Decentralized swarm construction of 2D shapes on a grid."""

from .engine import Metrics, SimConfig, Simulation, TraceEvent, run, simulate
from .grid import GridView, GridWorld, Shape, ShapeError, centroid
from .shapefile import Scenario, load_scenario, parse_shape
from .trace import Trace, read_trace, write_trace
from .validate import validate_trace

__all__ = [
    "GridView",
    "GridWorld",
    "Metrics",
    "Scenario",
    "Shape",
    "ShapeError",
    "SimConfig",
    "Simulation",
    "Trace",
    "TraceEvent",
    "centroid",
    "load_scenario",
    "parse_shape",
    "read_trace",
    "run",
    "simulate",
    "validate_trace",
    "write_trace",
]
