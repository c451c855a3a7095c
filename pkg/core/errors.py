"""
Exception hierarchy for the smoothing toolkit.
"""

from typing import Optional


class SmootherError(Exception):
    """Base class for all toolkit errors"""


class InvalidPath(SmootherError):
    """Degenerate or malformed polyline"""


class OutOfDomain(SmootherError):
    """Query outside the domain of a reference frame"""


class EmptyOffset(SmootherError):
    """Inward offset erased the polygon"""


class ModelSingularity(SmootherError):
    """Spatial model evaluated at or beyond its singularity"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class InfeasibleReference(SmootherError):
    """Reference curvature exceeds the steering capability"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class FallbackDubinsCorner(SmootherError):
    """Corner cannot take a 5-point reference; a Dubins reference is used instead"""


class StitchMismatch(SmootherError):
    """Smoothed segment does not meet the path it replaces"""


class InputError(SmootherError):
    """Unusable field input"""


class LpSolverError(SmootherError):
    """Solver ended in a state other than optimal, infeasible or unbounded"""


class SmoothingFailed(SmootherError):
    """An instance LP did not reach an optimal solution"""

    def __init__(self, message: str, segment_id: str = "", status: Optional[str] = None):
        super().__init__(message)
        self.segment_id = segment_id
        self.status = status
