#!/usr/bin/env python3
"""
End-to-end checks on the shipped regression field and on a square field corner
"""

import csv
import math
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
import shapely

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.config import Config, RunConfig
from core.cli_io import load_field, run_pipeline
from core.coverage_analysis import find_gaps, rasterize_swath
from core.field_plan import assemble_coverage_plan, build_layout
from core.orchestrator import detection_parameters, prepare_tasks
from core.reference_gen import SegmentKind, detect_edgy_segments
from core.smoother import check_feasibility
from core.studies import sweep_radius

SQUARE = [(0, 0), (200, 0), (200, 200), (0, 200)]


def pipeline_config(**overrides):
    return RunConfig(max_workers=2, record_timings=False, compute_coverage=False, **overrides)


class TestRegressionField(unittest.TestCase):
    """Test suite for the full pipeline on the regression field"""

    @classmethod
    def setUpClass(cls):
        cls.cfg = pipeline_config()
        cls.layout = load_field(Config.REGRESSION_FIELD, cls.cfg.operating_width_m)
        cls.result = run_pipeline(cls.layout, cls.cfg)

    def test_segment_counts(self):
        """Test the field yields its headland corners and lane transitions"""
        kinds = [s.kind for s in self.result.segments]
        self.assertGreaterEqual(sum(k.is_transition for k in kinds), 16)
        self.assertGreaterEqual(kinds.count(SegmentKind.HEADLAND_CORNER), 3)

    def test_no_failures(self):
        """Test every instance is solved"""
        self.assertEqual(self.result.failures, {})
        self.assertEqual(self.result.report.failed, [])
        self.assertEqual(len(self.result.instances), len(self.result.segments))

    def test_feasibility(self):
        """Test steering box and rate limits hold on every solution"""
        params = self.cfg.vehicle_params()
        for instance in self.result.instances:
            report = check_feasibility(instance.smoothed, params, tol=1e-6)
            self.assertTrue(report.ok, f"{instance.segment.segment_id}: {report}")

    def test_bezier_baseline_not_drivable(self):
        """Test the cubic Bezier fit exceeds the curvature limit on every corner"""
        corners = [r for r in self.result.report.rows if r.kind == SegmentKind.HEADLAND_CORNER.value]
        self.assertTrue(corners)
        for row in corners:
            self.assertIs(row.bezier_drivable, False, row.segment_id)

    def test_linearisation_fidelity(self):
        """Test the nonlinear rollout stays close to the linear prediction on gentle references"""
        checked = 0
        for instance in self.result.instances:
            d = instance.smoothed.diagnostics
            frame = instance.smoothed.frame
            if math.isnan(d.rollout_max_deviation) or np.max(np.abs(frame.interval_curvature())) > 0.2:
                continue
            checked += 1
            self.assertLessEqual(d.rollout_max_deviation, 0.05 * max(1.0, frame.length / 50.0),
                                 instance.segment.segment_id)
        self.assertGreater(checked, 0)

    def test_solve_time(self):
        """Test every instance solves its LPs within 50 ms"""
        for instance in self.result.instances:
            self.assertLessEqual(instance.smoothed.diagnostics.total_solve_time, 0.05, instance.segment.segment_id)

    def test_final_plan_has_no_edgy_segments(self):
        """Test detection on the smoothed plan finds nothing left to smooth"""
        self.assertEqual(detect_edgy_segments(self.result.plan, path_id="final", **detection_parameters(self.cfg)), [])

    def test_timings_blanked_in_report(self):
        """Test timing columns are empty when timings are not recorded"""
        with tempfile.TemporaryDirectory() as tmp:
            with open(self.result.report.to_csv(Path(tmp) / "report.csv"), encoding="utf-8") as f:
                rows = list(csv.DictReader(f))
        solved = [r for r in rows if r["status"] == "solved"]
        self.assertTrue(solved)
        for row in solved:
            self.assertEqual(row["solve_time_s"], "")
            self.assertEqual(row["reference_time_s"], "")

    def test_transition_ranges_widen_with_radius(self):
        """Test re-detection at a larger Dubins radius keeps the segments and widens the transitions"""
        plan = assemble_coverage_plan(self.layout, self.cfg.ds_m, self.cfg.turn_mode)
        _, small, _ = prepare_tasks(self.layout, self.cfg.with_overrides(r_dubins_m=5.0), plan=plan)
        _, large, _ = prepare_tasks(self.layout, self.cfg.with_overrides(r_dubins_m=7.0), plan=plan)
        self.assertEqual([s.apex_index for s in small], [s.apex_index for s in large])
        s = plan.cumulative_s
        spans = [sum(s[seg.i1] - s[seg.i0] for seg in segments if seg.kind.is_transition)
                 for segments in (small, large)]
        self.assertGreater(spans[1], spans[0])

    def test_radius_sweep_trend(self):
        """Test larger Dubins radii pull the smoothed transitions closer to their references"""
        rows = sweep_radius(self.layout, self.cfg, [5.0, 5.33, 7.0])
        self.assertTrue(all(r.failed == 0 for r in rows))
        means = [r.mean_max_abs_e_y for r in rows]
        maxima = [r.max_max_abs_e_y for r in rows]
        self.assertTrue(all(a > b for a, b in zip(means, means[1:])), means)
        self.assertTrue(all(a > b for a, b in zip(maxima, maxima[1:])), maxima)
        self.assertLessEqual(maxima[-1], 0.10)
        self.assertGreaterEqual(means[0], 0.05)
        self.assertLessEqual(means[0], 1.0)


class TestCircleField(unittest.TestCase):
    """Test suite for a field without headland corners"""

    def test_circle_field_runs_through(self):
        """Test a round field yields no corner LPs and reports every instance"""
        t = np.linspace(0.0, 2.0 * math.pi, 200, endpoint=False)
        cfg = pipeline_config()
        layout = build_layout(np.column_stack([150.0 * np.cos(t), 150.0 * np.sin(t)]), cfg.operating_width_m)
        result = run_pipeline(layout, cfg)

        self.assertFalse(any(s.kind is SegmentKind.HEADLAND_CORNER for s in result.segments))
        self.assertFalse(any(r.problem == "problem1" for r in result.report.rows))
        self.assertEqual(len(result.instances) + len(result.failures), len(result.segments))
        self.assertEqual({r.segment_id for r in result.report.failed}, set(result.failures))
        self.assertTrue(np.all(np.isfinite(result.plan.vertices)))


class TestZeroGapCorner(unittest.TestCase):
    """Test suite for coverage at a smoothed 90 degree headland corner"""

    def test_corner_has_no_gaps(self):
        """Test the smoothed corner leaves no uncovered cell at a 0.1 m raster"""
        cfg = pipeline_config()
        layout = build_layout(SQUARE, cfg.operating_width_m)
        result = run_pipeline(layout, cfg)
        self.assertEqual(result.failures, {})
        corners = [i for i in result.instances if i.segment.kind is SegmentKind.HEADLAND_CORNER]
        self.assertEqual(len(corners), 4)
        self.assertFalse(any(i.fallback_corner for i in corners))

        raster = rasterize_swath(result.plan, cfg.operating_width_m, 0.1, bounds=(-2.0, -2.0, 32.0, 32.0))
        window = shapely.box(0.0, 0.0, 30.0, 30.0).intersection(layout.contour_polygon)
        report = find_gaps(raster, window)
        self.assertEqual(report.gap_cells, 0, report.regions[:3])


if __name__ == '__main__':
    unittest.main()
