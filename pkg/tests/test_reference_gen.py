#!/usr/bin/env python3
"""
Unit tests for edgy-segment detection and reference construction
"""

import math
import os
import sys
import unittest

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.config import RunConfig, SolverConfig
from core.errors import FallbackDubinsCorner, InfeasibleReference
from core.field_plan import assemble_coverage_plan, build_layout
from core.geometry import PathPolyline, PathRole
from core.orchestrator import detection_parameters
from core.reference_gen import (
    EdgySegment, SegmentKind, SideConstraint, build_dubins_reference, build_pwa5_reference,
    compute_weight_index, default_extension_length, detect_edgy_segments, interior_side,
    transition_extension, uniform_stations,
)

SQUARE = [(0, 0), (200, 0), (200, 200), (0, 200)]


def square_plan(cfg=None):
    cfg = cfg or RunConfig()
    layout = build_layout(SQUARE, cfg.operating_width_m)
    plan = assemble_coverage_plan(layout, cfg.ds_m, cfg.turn_mode)
    return layout, plan, cfg


def bent_path(turn_deg, leg=30, labels=None):
    """East along y=0 for leg metres, then leg metres after a left turn of turn_deg"""
    heading = math.radians(turn_deg)
    first = np.column_stack([np.arange(0.0, leg + 1.0), np.zeros(leg + 1)])
    k = np.arange(1.0, leg + 1.0)
    second = np.column_stack([leg + k * math.cos(heading), k * math.sin(heading)])
    return PathPolyline.from_points(np.vstack([first, second]), labels)


def l_path(ds=1.0, leg=30.0, labels=None):
    """Left turn: east along y=0 then north along x=leg"""
    xs = np.arange(0.0, leg + 1e-9, ds)
    first = np.column_stack([xs, np.zeros_like(xs)])
    second = np.column_stack([np.full(len(xs) - 1, leg), xs[1:]])
    xy = np.vstack([first, second])
    return PathPolyline.from_points(xy, labels)


class TestDetection(unittest.TestCase):
    """Test suite for edgy-segment detection"""

    @classmethod
    def setUpClass(cls):
        cls.layout, cls.plan, cls.cfg = square_plan()
        cls.segments = detect_edgy_segments(cls.plan, path_id="plan", **detection_parameters(cls.cfg))

    def test_square_field_counts(self):
        """Test the square field gives 4 headland corners and 18 transitions"""
        corners = [s for s in self.segments if s.kind is SegmentKind.HEADLAND_CORNER]
        transitions = [s for s in self.segments if s.kind.is_transition]
        self.assertEqual(len(self.layout.lanes), 9)
        self.assertEqual(len(corners), 4)
        self.assertEqual(len(transitions), 18)

    def test_segments_disjoint_and_sorted(self):
        """Test segments are ordered along the path and do not overlap"""
        for a, b in zip(self.segments, self.segments[1:]):
            self.assertLess(a.i1, b.i0 + 1)
            self.assertLess(a.i0, b.i0)
        for seg in self.segments:
            self.assertTrue(seg.i0 < seg.apex_index < seg.i1)

    def test_transition_directions_alternate(self):
        """Test every headland-to-lane transition is matched by a lane-to-headland one"""
        kinds = [s.kind for s in self.segments if s.kind.is_transition]
        self.assertEqual(kinds.count(SegmentKind.HEADLAND_TO_LANE), 9)
        self.assertEqual(kinds.count(SegmentKind.LANE_TO_HEADLAND), 9)

    def test_straight_path_has_no_segments(self):
        """Test a straight path has nothing to smooth"""
        path = PathPolyline.from_points(np.column_stack([np.arange(20.0), np.zeros(20)]))
        self.assertEqual(detect_edgy_segments(path, math.radians(5), 15.0, 10.0, 7.5), [])

    def test_close_corners_merge(self):
        """Test two corners closer than the merge distance form one segment"""
        xy = [(0, 0), (10, 0), (20, 0), (20, 4), (20, 8), (20, 12), (30, 12), (40, 12)]
        path = PathPolyline.from_points(xy)
        merged = detect_edgy_segments(path, math.radians(5), 15.0, 1.0, 1.0)
        self.assertEqual(len(merged), 1)
        split = detect_edgy_segments(path, math.radians(5), 5.0, 1.0, 1.0)
        self.assertEqual(len(split), 2)

    def test_invalid_segment_range(self):
        """Test an empty vertex range is rejected"""
        with self.assertRaises(ValueError):
            EdgySegment("p", 4, 4, SegmentKind.HEADLAND_CORNER, 4)


class TestCornerReference(unittest.TestCase):
    """Test suite for 5-point corner references"""

    @classmethod
    def setUpClass(cls):
        cls.layout, cls.plan, cls.cfg = square_plan()
        segments = detect_edgy_segments(cls.plan, path_id="plan", **detection_parameters(cls.cfg))
        cls.corner = next(s for s in segments if s.kind is SegmentKind.HEADLAND_CORNER)
        cls.reference = build_pwa5_reference(cls.corner, cls.plan, cls.layout.contour,
                                             cls.cfg.operating_width_m, cls.cfg.ds_m)

    def test_anchors_and_endpoints(self):
        """Test A and E are the segment boundary vertices and B, D are midpoints"""
        A, B, T, D, E = self.reference.anchors
        np.testing.assert_allclose(A, self.plan.vertices[self.corner.i0])
        np.testing.assert_allclose(E, self.plan.vertices[self.corner.i1])
        np.testing.assert_allclose(B, 0.5 * (A + T))
        np.testing.assert_allclose(D, 0.5 * (T + E))
        np.testing.assert_allclose(self.reference.frame.xy[0], A, atol=1e-9)
        np.testing.assert_allclose(self.reference.frame.xy[-1], E, atol=1e-9)

    def test_tip_on_outward_bisector(self):
        """Test the tip lies w/2 inside the contour corner, beyond the headland corner"""
        tip = self.reference.anchors[2]
        distance = min(float(np.hypot(*(tip - np.array(c, dtype=float)))) for c in SQUARE)
        self.assertAlmostEqual(distance, 0.5 * self.cfg.operating_width_m, places=6)
        self.assertGreater(float(np.max(np.abs(tip - 100.0))), 90.0)

    def test_tip_from_contour_corner(self):
        """Test headland corner (10, 10) over contour corner (0, 0) with w = 20 puts the tip 10 m from it"""
        down = np.column_stack([np.full(31, 10.0), np.arange(40.0, 9.0, -1.0)])
        east = np.column_stack([np.arange(11.0, 41.0), np.full(30, 10.0)])
        path = PathPolyline.from_points(np.vstack([down, east]), role=PathRole.HEADLAND)
        segment = EdgySegment("p", 10, 50, SegmentKind.HEADLAND_CORNER, 30)
        contour = [(0, 0), (60, 0), (60, 60), (0, 60)]
        reference = build_pwa5_reference(segment, path, contour, 20.0, 1.0)

        tip, corner, apex = reference.anchors[2], np.zeros(2), np.array([10.0, 10.0])
        np.testing.assert_allclose(reference.tip_target, corner, atol=1e-9)
        np.testing.assert_allclose(tip, [5.0 * math.sqrt(2.0)] * 2, atol=1e-6)
        self.assertAlmostEqual(float(np.hypot(*(tip - corner))), 10.0, places=6)
        along = float(np.dot(tip - corner, apex - corner)) / float(np.dot(apex - corner, apex - corner))
        self.assertTrue(0.0 < along < 1.0)

    def test_side_constraint_and_interior(self):
        """Test corners carry the upper side constraint towards the interior"""
        self.assertIs(self.reference.side_constraint, SideConstraint.UPPER)
        self.assertIn(self.reference.interior_sign, (-1, 1))
        self.assertAlmostEqual(self.reference.tip_clearance, 0.5 * self.cfg.operating_width_m - 0.25)

    def test_uniform_spacing(self):
        """Test samples are spaced at most ds apart"""
        spacing = self.reference.frame.spacing
        self.assertLessEqual(float(np.max(spacing)), self.cfg.ds_m + 1e-9)
        self.assertGreater(float(np.mean(spacing)), 0.95 * self.cfg.ds_m)

    def test_reflex_corner_falls_back(self):
        """Test a corner turning away from the field interior raises the fallback"""
        path = l_path()
        segment = EdgySegment("p", 20, 40, SegmentKind.HEADLAND_CORNER, 30)
        # the field lies to the right of the path, while the path turns left
        contour = [(-10, -50), (60, -50), (60, 40), (40, 40), (40, 0), (-10, 0)]
        with self.assertRaises(FallbackDubinsCorner):
            build_pwa5_reference(segment, path, contour, 20.0, 1.0)

    def test_interior_side(self):
        """Test the interior side sign on a square"""
        self.assertEqual(interior_side(np.array([100.0, 10.0]), np.array([1.0, 0.0]), SQUARE), 1)
        self.assertEqual(interior_side(np.array([100.0, 10.0]), np.array([-1.0, 0.0]), SQUARE), -1)


class TestTransitionReference(unittest.TestCase):
    """Test suite for Dubins transition references"""

    def setUp(self):
        labels = [PathRole.HEADLAND] * 31 + [PathRole.LANE] * 30
        self.path = l_path(labels=labels)
        self.segment = EdgySegment("p", 15, 45, SegmentKind.HEADLAND_TO_LANE, 30)
        self.radius = 5.0

    def test_default_extension(self):
        """Test the extension clamps 0.5 R into [2, 5]"""
        self.assertEqual(default_extension_length(2.0), 2.0)
        self.assertEqual(default_extension_length(6.0), 3.0)
        self.assertEqual(default_extension_length(20.0), 5.0)

    def test_extension_shortened_by_room(self):
        """Test the extension shrinks when the tangent length eats the straight room"""
        self.assertAlmostEqual(transition_extension(self.segment, self.path, self.radius, 2.5), 2.5)
        tight = EdgySegment("p", 24, 36, SegmentKind.HEADLAND_TO_LANE, 30)
        self.assertAlmostEqual(transition_extension(tight, self.path, self.radius, 2.5), 1.0)

    def test_transition_margin_follows_turn(self):
        """Test a 120 degree transition widens to R tan(60 deg) plus the straight share"""
        path = bent_path(120, labels=[PathRole.HEADLAND] * 31 + [PathRole.LANE] * 30)
        fixed = detect_edgy_segments(path, math.radians(5), 15.0, 1.0, 10.5)
        aware = detect_edgy_segments(path, math.radians(5), 15.0, 1.0, 10.5, dubins_radius=7.0)
        self.assertEqual([(s.i0, s.i1) for s in fixed], [(20, 40)])
        self.assertEqual([(s.i0, s.i1) for s in aware], [(15, 45)])
        self.assertIs(aware[0].kind, SegmentKind.HEADLAND_TO_LANE)

        self.assertAlmostEqual(transition_extension(aware[0], path, 7.0, 3.5), 15.0 - 7.0 * math.sqrt(3.0))
        self.assertEqual(transition_extension(fixed[0], path, 7.0, 3.5), SolverConfig.MIN_EXTENSION_M)

    def test_right_angle_margin_unchanged(self):
        """Test a 90 degree transition keeps the configured margin"""
        path = l_path(labels=[PathRole.HEADLAND] * 31 + [PathRole.LANE] * 30)
        aware = detect_edgy_segments(path, math.radians(5), 15.0, 1.0, 10.5, dubins_radius=7.0)
        self.assertEqual([(s.i0, s.i1) for s in aware], [(20, 40)])

    def test_wide_range_gives_single_turn(self):
        """Test a range with room for the tangents gives one turn of the net heading change"""
        path = bent_path(120, labels=[PathRole.HEADLAND] * 31 + [PathRole.LANE] * 30)
        segment = EdgySegment("p", 15, 45, SegmentKind.HEADLAND_TO_LANE, 30)
        reference = build_dubins_reference(segment, path, 7.0, 2.0, 1.0)
        self.assertEqual(reference.extension, 2.0)
        self.assertAlmostEqual(reference.dubins.total_turn, math.radians(120), places=6)
        self.assertLessEqual(reference.frame.length, 30.0)

    def test_short_range_rejects_loop_word(self):
        """Test a range too short for the tangents is rejected instead of looping"""
        path = bent_path(120, labels=[PathRole.HEADLAND] * 31 + [PathRole.LANE] * 30)
        segment = EdgySegment("p", 20, 40, SegmentKind.HEADLAND_TO_LANE, 30)
        with self.assertRaises(InfeasibleReference):
            build_dubins_reference(segment, path, 7.0, 3.5, 1.0)

    def test_reference_geometry(self):
        """Test the reference starts and ends on the segment vertices with exact stations"""
        reference = build_dubins_reference(self.segment, self.path, self.radius, 2.5, 1.0)
        frame = reference.frame
        np.testing.assert_allclose(frame.xy[0], (15.0, 0.0))
        np.testing.assert_allclose(frame.xy[-1], (30.0, 15.0))
        self.assertAlmostEqual(frame.length, reference.dubins.length + 5.0, places=9)
        self.assertAlmostEqual(frame.psi[0], 0.0)
        self.assertAlmostEqual(frame.psi[-1], math.pi / 2, places=9)
        self.assertLessEqual(np.max(np.abs(frame.kappa)), 1.0 / self.radius + 1e-12)
        self.assertEqual(reference.extension, 2.5)

    def test_weight_index(self):
        """Test the weight index marks the last sample near the headland"""
        headland = [(-50.0, 0.0), (100.0, 0.0)]
        reference = build_dubins_reference(self.segment, self.path, self.radius, 2.5, 1.0, headland, 1.0)
        index = reference.weight_index
        self.assertIsNotNone(index)
        self.assertTrue(0 < index < reference.frame.n_samples - 1)
        self.assertLessEqual(abs(reference.frame.xy[index, 1]), 1.0)
        self.assertGreater(abs(reference.frame.xy[index + 1, 1]), 1.0)

    def test_weight_index_defaults(self):
        """Test no nearby headland yields 0 or N, and lane-to-lane yields None"""
        far = [(-50.0, -100.0), (100.0, -100.0)]
        reference = build_dubins_reference(self.segment, self.path, self.radius, 2.5, 1.0)
        self.assertIsNone(reference.weight_index)
        self.assertEqual(compute_weight_index(reference, far), 0)

        segment = EdgySegment("p", 15, 45, SegmentKind.LANE_TO_HEADLAND, 30)
        reference = build_dubins_reference(segment, self.path, self.radius, 2.5, 1.0)
        self.assertEqual(compute_weight_index(reference, far), reference.frame.n_samples - 1)

        segment = EdgySegment("p", 15, 45, SegmentKind.LANE_TO_LANE, 30)
        reference = build_dubins_reference(segment, self.path, self.radius, 2.5, 1.0)
        self.assertIsNone(compute_weight_index(reference, far))

    def test_uniform_stations(self):
        """Test stations are multiples of the spacing plus the end"""
        np.testing.assert_allclose(uniform_stations(3.5, 1.0), [0, 1, 2, 3, 3.5])
        np.testing.assert_allclose(uniform_stations(0.5, 1.0), [0, 0.25, 0.5])


if __name__ == '__main__':
    unittest.main()
