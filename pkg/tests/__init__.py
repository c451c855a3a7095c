"""
Headland Smoother Test Suite

Unit tests for geometry, vehicle dynamics, Dubins paths, the LP layer,
reference generation and smoothing, plus pipeline and regression-field
integration tests.
"""

__all__ = []
