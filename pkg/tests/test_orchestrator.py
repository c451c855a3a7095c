#!/usr/bin/env python3
"""
Unit tests for the instance orchestrator and the parameter studies
"""

import math
import os
import sys
import tempfile
import threading
import time
import unittest
from pathlib import Path
from unittest.mock import patch

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.config import RunConfig
from core.errors import SmoothingFailed
from core.field_plan import build_layout
from core.geometry import PathPolyline
from core.orchestrator import InstanceOrchestrator, SmoothingTask, detection_parameters, prepare_tasks
from core.reference_gen import EdgySegment, SegmentKind
from core.studies import saturated_study, sweep_spacing, write_rows_csv, write_saturation_csv

SQUARE = [(0, 0), (200, 0), (200, 200), (0, 200)]


def make_tasks(count):
    path = PathPolyline.from_points([(i, 0.0) for i in range(4 * count + 2)])
    cfg = RunConfig()
    return [SmoothingTask(EdgySegment("p", 4 * k, 4 * k + 2, SegmentKind.LANE_TO_LANE, 4 * k + 1),
                          path, cfg, SQUARE) for k in range(count)]


class TestInstanceOrchestrator(unittest.TestCase):
    """Test suite for InstanceOrchestrator"""

    def test_invalid_worker_count(self):
        """Test at least one worker is required"""
        with self.assertRaises(ValueError):
            InstanceOrchestrator(0)

    def test_outcomes_in_task_order_with_failures(self):
        """Test results keep task order and failures are captured per task"""
        tasks = make_tasks(6)

        def fake(segment, path, cfg, contour, headland, dump_dir):
            if segment.i0 == 8:
                raise SmoothingFailed("forced", segment_id=segment.segment_id, status="infeasible")
            return segment.i0

        for workers in (1, 3):
            orchestrator = InstanceOrchestrator(workers)
            with patch("core.orchestrator.smooth_instance", side_effect=fake):
                outcomes = orchestrator.smooth_all(tasks)
            self.assertEqual(outcomes[:2], [0, 4])
            self.assertIsInstance(outcomes[2], SmoothingFailed)
            self.assertEqual(outcomes[3:], [12, 16, 20])
            status = orchestrator.get_status()
            self.assertEqual(status["total_instances"], 6)
            self.assertEqual(status["status_counts"]["solved"], 5)
            self.assertEqual(status["status_counts"]["failed"], 1)
            self.assertIn(tasks[2].task_id, status["failures"])
            self.assertIsNotNone(status["finished"])

    def test_worker_bound(self):
        """Test no more than max_workers instances run at once"""
        lock = threading.Lock()
        active, peak = [0], [0]

        def fake(segment, path, cfg, contour, headland, dump_dir):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1
            return segment.i0

        with patch("core.orchestrator.smooth_instance", side_effect=fake):
            InstanceOrchestrator(2).smooth_all(make_tasks(8))
        self.assertLessEqual(peak[0], 2)

    def test_empty_task_list(self):
        """Test an empty task list returns immediately"""
        orchestrator = InstanceOrchestrator(2)
        self.assertEqual(orchestrator.smooth_all([]), [])
        self.assertEqual(orchestrator.get_status()["total_instances"], 0)


class TestTaskPreparation(unittest.TestCase):
    """Test suite for detection parameters and task preparation"""

    def test_detection_parameters(self):
        """Test merge distances and margins follow the turning radius and width"""
        cfg = RunConfig()
        params = detection_parameters(cfg)
        r_min = cfg.min_turning_radius
        self.assertAlmostEqual(params["merge_distance"], 3 * r_min)
        self.assertAlmostEqual(params["corner_margin"], max(2 * r_min, 10.0))
        self.assertAlmostEqual(params["transition_margin"], cfg.r_dubins + cfg.l_ext)
        self.assertEqual(params["dubins_radius"], cfg.r_dubins)
        direct = detection_parameters(cfg.with_overrides(turn_mode="direct"))
        self.assertAlmostEqual(direct["merge_distance"], 30.0)

    def test_prepare_tasks(self):
        """Test every detected segment becomes a task on the same plan"""
        cfg = RunConfig()
        layout = build_layout(SQUARE, cfg.operating_width_m)
        plan, segments, tasks = prepare_tasks(layout, cfg)
        self.assertEqual(len(tasks), len(segments))
        self.assertTrue(all(t.path is plan for t in tasks))
        self.assertEqual(len({t.task_id for t in tasks}), len(tasks))


class TestStudies(unittest.TestCase):
    """Test suite for parameter studies"""

    def test_saturated_study(self):
        """Test both initial steering angles are simulated and written"""
        params = RunConfig().vehicle_params()
        results = saturated_study(params, 0.01, params.v_ref)
        self.assertEqual([r.delta0 for r in results], [0.0, params.delta_min])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_saturation_csv(results, 0.01, Path(tmp) / "saturated.csv")
            lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "delta0_deg,t_s,x_m,y_m,psi_deg,delta_deg")
        self.assertEqual(len(lines) - 1, sum(len(r.trajectory) for r in results))
        self.assertAlmostEqual(float(lines[-1].split(",")[0]), math.degrees(params.delta_min), places=3)

    def test_spacing_sweep(self):
        """Test coarser grids shrink the transition LPs"""
        cfg = RunConfig(max_workers=2)
        layout = build_layout(SQUARE, cfg.operating_width_m)
        rows = sweep_spacing(layout, cfg, [1.0, 2.0])
        self.assertEqual([r.ds for r in rows], [1.0, 2.0])
        self.assertEqual(rows[0].failed, 0)
        self.assertEqual(rows[0].instances, 18)
        self.assertLess(rows[1].mean_n_u, rows[0].mean_n_u)
        with tempfile.TemporaryDirectory() as tmp:
            lines = write_rows_csv(rows, Path(tmp) / "sweep.csv").read_text(encoding="utf-8").splitlines()
        self.assertTrue(lines[0].startswith("ds,instances,failed"))
        self.assertEqual(len(lines), 3)


if __name__ == '__main__':
    unittest.main()
