"""
Headland Smoother Core Components

This package contains the core functionality of the headland smoother:
- Geometry: labelled polylines, path-aligned frames, polygon offsets
- Vehicle Dynamics: spatial bicycle model, exact discretisation, saturated turns
- Dubins: shortest curvature-bounded paths
- LP Core: sparse LP container and HiGHS-backed solver
- Reference Generation: edgy-segment detection, corner and transition references
- Smoother: corner and transition LPs, stitching
- Coverage Analysis: swath raster, gaps, Bezier baseline, tyre traces
- Field Plan, Orchestrator, Studies, CLI I/O: pipeline plumbing
"""

from .cli_io import PipelineResult, RunReport, emit_outputs, load_field, load_plan, run_pipeline
from .dubins import DubinsPath, Pose, shortest_dubins
from .geometry import PathPolyline, PathRole, ReferenceFrame, build_frame, resample_uniform
from .lp_core import LinearProgram, LpSolution, solve
from .reference_gen import EdgySegment, ReferencePath, SegmentKind, detect_edgy_segments
from .smoother import SmoothedPath, smooth_instance, solve_smoothing, stitch_replace
from .vehicle_dynamics import VehicleParams, linearize_and_discretize, saturated_steering_simulation

__version__ = "1.0.0"
__all__ = [
    "PipelineResult", "RunReport", "emit_outputs", "load_field", "load_plan", "run_pipeline",
    "DubinsPath", "Pose", "shortest_dubins",
    "PathPolyline", "PathRole", "ReferenceFrame", "build_frame", "resample_uniform",
    "LinearProgram", "LpSolution", "solve",
    "EdgySegment", "ReferencePath", "SegmentKind", "detect_edgy_segments",
    "SmoothedPath", "smooth_instance", "solve_smoothing", "stitch_replace",
    "VehicleParams", "linearize_and_discretize", "saturated_steering_simulation",
]
