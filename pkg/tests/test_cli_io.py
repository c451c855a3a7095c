#!/usr/bin/env python3
"""
Integration tests for field loading, the pipeline, output files and the command line
"""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.config import RunConfig
from core.cli_io import (
    RunReport, ReportRow, emit_outputs, load_field, load_plan, main, plan_to_geojson, run_pipeline,
)
from core.errors import InputError
from core.geometry import PathPolyline, PathRole

SQUARE = [(0, 0), (200, 0), (200, 200), (0, 200)]


def write_geojson(path, features):
    Path(path).write_text(json.dumps({"type": "FeatureCollection", "features": features}), encoding="utf-8")


def contour_feature(points, role="contour"):
    ring = [list(p) for p in points] + [list(points[0])]
    return {"type": "Feature", "properties": {"role": role},
            "geometry": {"type": "Polygon", "coordinates": [ring]}}


def fast_config(**changes):
    return RunConfig(raster_cell_m=1.0, max_workers=2, record_timings=False).with_overrides(**changes)


class TestLoadField(unittest.TestCase):
    """Test suite for field ingestion"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_csv_with_header(self):
        """Test a CSV contour with a header row"""
        path = self.dir / "field.csv"
        path.write_text("x,y\n" + "\n".join(f"{x},{y}" for x, y in SQUARE) + "\n", encoding="utf-8")
        layout = load_field(path, 20.0)
        self.assertEqual(len(layout.lanes), 9)
        self.assertAlmostEqual(layout.contour_polygon.area, 40000.0)

    def test_geojson_contour_only(self):
        """Test a GeoJSON polygon gets a synthesised headland and lanes"""
        path = self.dir / "field.geojson"
        write_geojson(path, [contour_feature(SQUARE)])
        layout = load_field(path, 20.0)
        self.assertAlmostEqual(layout.headland.length, 720.0, places=6)
        self.assertEqual(len(layout.lanes), 9)

    def test_geojson_with_headland_and_lanes(self):
        """Test supplied headland and lane linestrings are used as given"""
        headland = [[10, 10], [190, 10], [190, 190], [10, 190], [10, 10]]
        lanes = [[[50, 10], [50, 190]], [[150, 190], [150, 10]]]
        features = [contour_feature(SQUARE),
                    {"type": "Feature", "properties": {"role": "headland"},
                     "geometry": {"type": "LineString", "coordinates": headland}}]
        features += [{"type": "Feature", "properties": {"role": "lane"},
                      "geometry": {"type": "LineString", "coordinates": lane}} for lane in lanes]
        path = self.dir / "field.geojson"
        write_geojson(path, features)
        layout = load_field(path, 20.0)
        self.assertEqual(len(layout.lanes), 2)
        np.testing.assert_allclose(layout.headland.vertices[0], (10, 10))

    def test_input_errors(self):
        """Test missing files, degree coordinates, self-intersections and missing contours"""
        with self.assertRaises(FileNotFoundError):
            load_field(self.dir / "missing.csv")

        degrees = self.dir / "degrees.csv"
        degrees.write_text("10.1,50.1\n10.2,50.1\n10.2,50.2\n", encoding="utf-8")
        with self.assertRaises(InputError):
            load_field(degrees)

        bowtie = self.dir / "bowtie.csv"
        bowtie.write_text("0,0\n100,100\n100,0\n0,100\n", encoding="utf-8")
        with self.assertRaises(InputError):
            load_field(bowtie)

        lines_only = self.dir / "lines.geojson"
        write_geojson(lines_only, [{"type": "Feature", "properties": {"role": "lane"},
                                    "geometry": {"type": "LineString", "coordinates": [[0, 0], [50, 0]]}}])
        with self.assertRaises(InputError):
            load_field(lines_only)

        broken = self.dir / "broken.geojson"
        broken.write_text("{not json", encoding="utf-8")
        with self.assertRaises(InputError):
            load_field(broken)

    def test_field_too_small_for_headland(self):
        """Test a field the headland offset erases is reported as input error"""
        path = self.dir / "small.csv"
        path.write_text("0,0\n15,0\n15,15\n0,15\n", encoding="utf-8")
        with self.assertRaises(InputError):
            load_field(path, 20.0)


class TestPlanGeojson(unittest.TestCase):
    """Test suite for plan export and re-import"""

    def test_round_trip_preserves_vertices_and_labels(self):
        """Test load_plan restores exactly what plan_to_geojson wrote"""
        labels = [PathRole.HEADLAND] * 3 + [PathRole.TRANSITION] + [PathRole.LANE] * 4
        plan = PathPolyline.from_points([(i, (i % 3) * 0.5) for i in range(8)], labels)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "plan.geojson"
            path.write_text(json.dumps(plan_to_geojson(plan)), encoding="utf-8")
            restored = load_plan(path)
        np.testing.assert_allclose(restored.vertices, plan.vertices)
        self.assertEqual(restored.labels, plan.labels)

    def test_features_are_continuous(self):
        """Test each later feature starts on the previous run's last vertex"""
        labels = [PathRole.HEADLAND] * 3 + [PathRole.LANE] * 3
        plan = PathPolyline.from_points([(i, 0.0) for i in range(6)], labels)
        features = plan_to_geojson(plan)["features"]
        self.assertEqual(len(features), 2)
        self.assertEqual(features[1]["geometry"]["coordinates"][0], features[0]["geometry"]["coordinates"][-1])

    def test_empty_plan(self):
        """Test an absent plan exports an empty collection"""
        self.assertEqual(plan_to_geojson(None), {"type": "FeatureCollection", "features": []})


class TestReport(unittest.TestCase):
    """Test suite for the run report"""

    def test_timings_blanked_and_aggregates(self):
        """Test timing columns are blank without record_timings and means are appended"""
        rows = [ReportRow("a", "headland_corner", "problem1", "solved", N=10, n_u=21, n_cstrts=38,
                          solve_time_s=0.5, max_abs_e_y_m=0.2, path_length_m=10.0),
                ReportRow("b", "headland_corner", "problem1", "solved", N=20, n_u=41, n_cstrts=78,
                          solve_time_s=0.7, max_abs_e_y_m=0.4, path_length_m=20.0),
                ReportRow("c", "lane_to_headland", "problem2", "failed", error="infeasible")]
        report = RunReport(rows, record_timings=False, metrics={"plan_length_m": 30.0})
        self.assertEqual(len(report.failed), 1)
        means = report.aggregates()["problem1"]
        self.assertEqual(means["N"], 15.0)
        self.assertAlmostEqual(means["max_max_abs_e_y_m"], 0.4)
        with tempfile.TemporaryDirectory() as tmp:
            lines = report.to_csv(Path(tmp) / "report.csv").read_text(encoding="utf-8").splitlines()
        header = lines[0].split(",")
        solve_column = header.index("solve_time_s")
        self.assertEqual(lines[1].split(",")[solve_column], "")
        self.assertTrue(any(line.startswith("mean:problem1") for line in lines))
        self.assertTrue(any(line.startswith("metric:plan_length_m") for line in lines))

    def test_empty_outputs(self):
        """Test an empty plan and report still write every file"""
        with tempfile.TemporaryDirectory() as tmp:
            written = emit_outputs(None, RunReport(), None, tmp)
            self.assertEqual(set(written), {"plan", "report", "figure"})
            data = json.loads(written["plan"].read_text(encoding="utf-8"))
            self.assertEqual(data["features"], [])
            self.assertEqual(len(written["report"].read_text(encoding="utf-8").splitlines()), 1)


class TestPipeline(unittest.TestCase):
    """Test suite for the full pipeline on the square field"""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls.tmp.name)
        cls.field = cls.dir / "square.geojson"
        write_geojson(cls.field, [contour_feature(SQUARE)])
        cls.cfg = fast_config()
        cls.layout = load_field(cls.field, cls.cfg.operating_width_m)
        cls.result = run_pipeline(cls.layout, cls.cfg)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_all_instances_solved(self):
        """Test every detected segment is solved and reported"""
        self.assertEqual(len(self.result.segments), 22)
        self.assertEqual(self.result.failures, {})
        self.assertEqual(len(self.result.instances), 22)
        solved = [r for r in self.result.report.rows if r.status == "solved"]
        self.assertEqual(len(solved), 22)

    def test_corner_rows_carry_bezier_baseline(self):
        """Test corner rows report the Bezier baseline"""
        corners = [r for r in self.result.report.rows if r.kind == "headland_corner"]
        self.assertEqual(len(corners), 4)
        for row in corners:
            self.assertEqual(row.problem, "problem1")
            self.assertIsNotNone(row.bezier_max_curvature)

    def test_final_plan_labels(self):
        """Test the stitched plan holds transition vertices and keeps its ends"""
        plan = self.result.plan
        self.assertIn(PathRole.TRANSITION, plan.labels)
        first = self.result.segments[0]
        self.assertGreater(first.i0, 0)
        metrics = self.result.report.metrics
        self.assertAlmostEqual(metrics["plan_length_m"], plan.length)
        self.assertIn("gap_area_m2", metrics)
        self.assertGreater(metrics["covered_area_m2"], 0.9 * 40000.0)

    def test_outputs_deterministic(self):
        """Test two runs write byte-identical files"""
        out_a, out_b = self.dir / "a", self.dir / "b"
        emit_outputs(self.result.plan, self.result.report, self.result.raster, out_a, self.layout,
                     self.result.instances)
        second = run_pipeline(load_field(self.field, self.cfg.operating_width_m), self.cfg)
        emit_outputs(second.plan, second.report, second.raster, out_b, second.layout, second.instances)
        for name in ("plan.geojson", "report.csv", "figure.svg", "coverage.pgm"):
            self.assertEqual((out_a / name).read_bytes(), (out_b / name).read_bytes(), name)

    def test_plan_round_trip(self):
        """Test the written plan reloads to the same polyline"""
        out = self.dir / "roundtrip"
        written = emit_outputs(self.result.plan, self.result.report, None, out)
        restored = load_plan(written["plan"])
        np.testing.assert_allclose(restored.vertices, self.result.plan.vertices)
        self.assertEqual(restored.labels, self.result.plan.labels)


class TestMain(unittest.TestCase):
    """Test suite for command-line exit codes"""

    def test_missing_field_exit_code(self):
        """Test a missing field file exits with 1"""
        with tempfile.TemporaryDirectory() as tmp:
            code = main(["plan", str(Path(tmp) / "missing.csv"), "--out", tmp])
        self.assertEqual(code, 1)

    def test_invalid_option_exit_code(self):
        """Test an invalid run option exits with 1"""
        with tempfile.TemporaryDirectory() as tmp:
            code = main(["simulate-saturated", "--out", tmp, "--ds-m", "-1"])
        self.assertEqual(code, 1)

    def test_simulate_saturated(self):
        """Test the saturated-turn command writes its trajectories"""
        with tempfile.TemporaryDirectory() as tmp:
            code = main(["simulate-saturated", "--out", tmp, "--dt", "0.01"])
            self.assertEqual(code, 0)
            self.assertTrue((Path(tmp) / "saturated.csv").exists())

    def test_smooth_corner_index_out_of_range(self):
        """Test an instance index beyond the available corners exits with 1"""
        with tempfile.TemporaryDirectory() as tmp:
            field = Path(tmp) / "square.geojson"
            write_geojson(field, [contour_feature(SQUARE)])
            code = main(["smooth-corner", str(field), "--index", "99", "--out", tmp])
        self.assertEqual(code, 1)

    def test_smooth_transition(self):
        """Test smoothing a single transition writes outputs"""
        with tempfile.TemporaryDirectory() as tmp:
            field = Path(tmp) / "square.geojson"
            write_geojson(field, [contour_feature(SQUARE)])
            code = main(["smooth-transition", str(field), "--index", "0", "--out", tmp,
                         "--raster-cell-m", "1.0"])
            self.assertEqual(code, 0)
            self.assertTrue((Path(tmp) / "plan.geojson").exists())
            self.assertTrue((Path(tmp) / "report.csv").exists())


if __name__ == '__main__':
    unittest.main()
