#!/usr/bin/env python3
"""
Pipeline Driver and Command Line

Loads a field, assembles the coverage plan, smooths every edgy segment,
stitches the results back and writes plan.geojson, report.csv,
figure.svg and coverage.pgm.
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402
from shapely.geometry import LineString, Polygon, shape  # noqa: E402

from config.config import Config, RunConfig, get_config, load_run_config  # noqa: E402
from .coverage_analysis import (  # noqa: E402
    CoverageRaster, GapReport, evaluate_bezier_baseline, find_gaps, rasterize_swath, tyre_trace_metrics,
)
from .errors import EmptyOffset, InputError, InvalidPath, SmootherError  # noqa: E402
from .field_plan import FieldLayout, build_layout  # noqa: E402
from .geometry import PathPolyline, PathRole  # noqa: E402
from .orchestrator import InstanceOrchestrator, prepare_tasks  # noqa: E402
from .reference_gen import EdgySegment, SegmentKind, SideConstraint  # noqa: E402
from .smoother import InstanceResult, smooth_instance, stitch_all  # noqa: E402
from .vehicle_dynamics import VehicleParams  # noqa: E402

logger = logging.getLogger(__name__)

__all__ = [
    "RunConfig", "ReportRow", "RunReport", "PipelineResult", "load_field", "run_pipeline",
    "emit_outputs", "load_plan", "main",
]

MIN_COORDINATE_SPAN_M = 10.0
SVG_HASH_SALT = "headland-smoother"
ROLE_COLOURS = {PathRole.HEADLAND: "tab:blue", PathRole.LANE: "tab:green", PathRole.TRANSITION: "tab:red"}


# --------------------------------------------------------------------------- ingest

def _check_contour(contour: np.ndarray) -> np.ndarray:
    if len(contour) < 3:
        raise InputError("Field contour needs at least 3 points")
    polygon = Polygon(contour)
    if not polygon.is_valid or not polygon.exterior.is_simple:
        raise InputError("Field contour is not a simple polygon")
    span = float(np.max(contour.max(axis=0) - contour.min(axis=0)))
    if span < MIN_COORDINATE_SPAN_M:
        raise InputError(f"Coordinate span {span:.4g} is below {MIN_COORDINATE_SPAN_M:.0f}; "
                         f"coordinates look like degrees, metres are required")
    return contour


def _read_geojson(path: Path) -> Tuple[np.ndarray, Optional[PathPolyline], Optional[List[PathPolyline]]]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e})") from e
    features = data.get("features", []) if data.get("type") == "FeatureCollection" else [data]

    contour, headland, lanes = None, None, []
    for feature in features:
        role = (feature.get("properties") or {}).get("role")
        try:
            geometry = shape(feature["geometry"])
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"{path}: unreadable geometry ({e})") from e
        if geometry.geom_type == "Polygon" and role in ("contour", None) and contour is None:
            contour = np.asarray(geometry.exterior.coords)[:, :2]
        elif geometry.geom_type == "LineString" and role == "headland":
            xy = np.asarray(geometry.coords)[:, :2]
            if np.hypot(*(xy[0] - xy[-1])) > 1e-9:
                xy = np.vstack([xy, xy[:1]])
            headland = PathPolyline.from_points(xy, role=PathRole.HEADLAND, drop_duplicates=True)
        elif geometry.geom_type == "LineString" and role == "lane":
            lanes.append(PathPolyline.from_points(np.asarray(geometry.coords)[:, :2], role=PathRole.LANE,
                                                  drop_duplicates=True))
    if contour is None:
        raise InputError(f"{path}: no polygon feature with role=contour")
    return contour, headland, lanes or None


def _read_csv(path: Path) -> np.ndarray:
    points = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or not "".join(row).strip():
                continue
            try:
                points.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if points:
                    raise InputError(f"{path}: unreadable row {row}")
                # header row
    return np.array(points, dtype=float).reshape(-1, 2)


def load_field(file, operating_width: float = Config.OPERATING_WIDTH_M,
               lane_heading: Optional[float] = None) -> FieldLayout:
    """
    Read a field from GeoJSON (polygon role=contour, optional linestrings
    role=headland / role=lane) or from a CSV of x,y contour points. A
    missing headland or missing lanes are synthesised.
    """
    path = Path(file)
    if not path.exists():
        raise FileNotFoundError(f"Field file not found: {path}")
    if path.suffix.lower() in (".geojson", ".json"):
        contour, headland, lanes = _read_geojson(path)
    else:
        contour, headland, lanes = _read_csv(path), None, None
    if len(contour) > 1 and np.hypot(*(contour[0] - contour[-1])) <= 1e-9:
        contour = contour[:-1]
    contour = _check_contour(contour)
    try:
        layout = build_layout(contour, operating_width, headland, lanes, lane_heading)
    except (EmptyOffset, InvalidPath, ValueError) as e:
        raise InputError(f"{path}: {e}") from e
    logger.info(f"Loaded field {path.name}: {len(contour)} contour points, {len(layout.lanes)} lanes")
    return layout


# --------------------------------------------------------------------------- report

@dataclass
class ReportRow:
    segment_id: str
    kind: str
    problem: str
    status: str
    N: Optional[int] = None
    n_u: Optional[int] = None
    n_cstrts: Optional[int] = None
    solve_time_s: Optional[float] = None
    reference_time_s: Optional[float] = None
    max_abs_e_y_m: Optional[float] = None
    path_length_m: Optional[float] = None
    radius_m: Optional[float] = None
    retried: Optional[bool] = None
    fallback_corner: Optional[bool] = None
    slack: Optional[float] = None
    rate_violations: Optional[int] = None
    bezier_time_s: Optional[float] = None
    bezier_max_curvature: Optional[float] = None
    bezier_drivable: Optional[bool] = None
    value: Optional[float] = None
    error: str = ""


TIMING_COLUMNS = ("solve_time_s", "reference_time_s", "bezier_time_s")
AGGREGATED_COLUMNS = ("N", "n_u", "n_cstrts", "solve_time_s", "max_abs_e_y_m", "path_length_m")


@dataclass
class RunReport:
    rows: List[ReportRow] = field(default_factory=list)
    record_timings: bool = True
    metrics: Dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> List[ReportRow]:
        return [r for r in self.rows if r.status == "failed"]

    def aggregates(self) -> Dict[str, Dict[str, Optional[float]]]:
        """Arithmetic means of the solved rows per problem type"""
        result = {}
        for problem in sorted({r.problem for r in self.rows if r.status == "solved"}):
            rows = [r for r in self.rows if r.status == "solved" and r.problem == problem]
            means: Dict[str, Optional[float]] = {"count": float(len(rows))}
            for column in AGGREGATED_COLUMNS:
                values = [getattr(r, column) for r in rows if getattr(r, column) is not None]
                means[column] = float(np.mean(values)) if values else None
            deviations = [r.max_abs_e_y_m for r in rows if r.max_abs_e_y_m is not None]
            means["max_max_abs_e_y_m"] = float(np.max(deviations)) if deviations else None
            result[problem] = means
        return result

    def _cells(self, values: Dict[str, Any]) -> List[str]:
        cells = []
        for column in (f.name for f in fields(ReportRow)):
            value = values.get(column)
            if column in TIMING_COLUMNS and not self.record_timings:
                value = None
            cells.append(_format_cell(value))
        return cells

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow([f.name for f in fields(ReportRow)])
            for row in self.rows:
                writer.writerow(self._cells(vars(row)))
            for problem, means in self.aggregates().items():
                values = {k: v for k, v in means.items() if k in AGGREGATED_COLUMNS}
                values.update(segment_id=f"mean:{problem}", kind="", problem=problem, status="aggregate")
                writer.writerow(self._cells(values))
            for name, value in sorted(self.metrics.items()):
                writer.writerow(self._cells({"segment_id": f"metric:{name}", "status": "metric", "value": value}))
        return path


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.9g}"
    return str(value)


def _problem_name(result: InstanceResult) -> str:
    return "problem1" if result.reference.side_constraint is SideConstraint.UPPER else "problem2"


def _report_row(segment: EdgySegment, outcome, plan: PathPolyline, cfg: RunConfig) -> ReportRow:
    if not isinstance(outcome, InstanceResult):
        problem = "problem2" if segment.kind.is_transition else "problem1"
        return ReportRow(segment.segment_id, segment.kind.value, problem, "failed", error=str(outcome))
    d = outcome.smoothed.diagnostics
    row = ReportRow(
        segment_id=segment.segment_id,
        kind=segment.kind.value,
        problem=_problem_name(outcome),
        status="solved",
        N=d.N,
        n_u=d.n_u,
        n_cstrts=d.n_cstrts,
        solve_time_s=d.total_solve_time,
        reference_time_s=outcome.reference.construction_time,
        max_abs_e_y_m=d.max_abs_e_y,
        path_length_m=d.traveled_length,
        radius_m=outcome.radius,
        retried=outcome.retried,
        fallback_corner=outcome.fallback_corner,
        slack=d.slack,
        rate_violations=d.state_dependent_rate_violations,
    )
    if segment.kind is SegmentKind.HEADLAND_CORNER:
        points = np.asarray(plan.vertices[segment.i0:segment.i1 + 1])
        if len(points) >= 4:
            baseline = evaluate_bezier_baseline(points, cfg.ds_m, cfg.min_turning_radius)
            row.bezier_time_s = baseline.fit_time
            row.bezier_max_curvature = baseline.max_curvature
            row.bezier_drivable = baseline.drivable
    return row


# --------------------------------------------------------------------------- pipeline

@dataclass
class PipelineResult:
    plan: PathPolyline
    report: RunReport
    raster: Optional[CoverageRaster]
    gaps: Optional[GapReport]
    segments: List[EdgySegment]
    instances: List[InstanceResult]
    layout: FieldLayout
    failures: Dict[str, str] = field(default_factory=dict)


def run_pipeline(layout: FieldLayout, cfg: RunConfig, dump_dir: Optional[str] = None) -> PipelineResult:
    """
    Assemble the plan, detect edgy segments, smooth every instance
    (concurrently, failures captured per instance), stitch the solved ones
    back and evaluate coverage of the final plan. A solved instance that
    does not meet the plan is reported as failed and left unstitched.
    """
    dump_dir = dump_dir if dump_dir is not None else (Config.LP_DUMP_DIR or None)
    plan, segments, tasks = prepare_tasks(layout, cfg, dump_dir)
    orchestrator = InstanceOrchestrator(cfg.max_workers)
    outcomes = orchestrator.smooth_all(tasks)

    report = RunReport(record_timings=cfg.record_timings)
    instances, replacements, failures = [], [], {}
    for segment, outcome in zip(segments, outcomes):
        report.rows.append(_report_row(segment, outcome, plan, cfg))
        if isinstance(outcome, InstanceResult):
            instances.append(outcome)
            replacements.append((segment, outcome.smoothed))
        else:
            failures[segment.segment_id] = str(outcome)

    stitch_failures: Dict[str, str] = {}
    final = stitch_all(plan, replacements, cfg.theta_edge, stitch_failures)
    if stitch_failures:
        failures.update(stitch_failures)
        instances = [i for i in instances if i.segment.segment_id not in stitch_failures]
        report.rows = [replace(r, status="failed", error=stitch_failures[r.segment_id])
                       if r.segment_id in stitch_failures else r for r in report.rows]
    report.metrics["plan_length_m"] = final.length

    raster, gaps = None, None
    if cfg.compute_coverage:
        raster, gaps = _coverage(final, layout, cfg)
        report.metrics.update(
            covered_area_m2=raster.covered_area(),
            overlap_area_m2=raster.overlap_area(),
            gap_area_m2=gaps.gap_area,
            gap_cells=float(gaps.gap_cells),
        )
        tyres = tyre_trace_metrics(final, cfg.tyre_track_m, cfg.tyre_width_m)
        report.metrics.update(tyre_trace_area_m2=tyres.trace_area, tyre_overlap_area_m2=tyres.overlap_area)

    logger.info(f"Pipeline finished: {len(instances)} solved, {len(failures)} failed, "
                f"plan length {final.length:.1f} m")
    return PipelineResult(final, report, raster, gaps, segments, instances, layout, failures)


def _coverage(plan: PathPolyline, layout: FieldLayout, cfg: RunConfig) -> Tuple[CoverageRaster, GapReport]:
    lo = layout.contour.min(axis=0) - cfg.operating_width_m
    hi = layout.contour.max(axis=0) + cfg.operating_width_m
    raster = rasterize_swath(plan, cfg.operating_width_m, cfg.raster_cell_m, (lo[0], lo[1], hi[0], hi[1]))
    return raster, find_gaps(raster, layout.contour_polygon)


# --------------------------------------------------------------------------- outputs

def _role_runs(plan: PathPolyline) -> List[Tuple[PathRole, int, int]]:
    """Maximal label-constant vertex ranges [start, stop)"""
    runs, start = [], 0
    for i in range(1, plan.n_vertices + 1):
        if i == plan.n_vertices or plan.labels[i] != plan.labels[start]:
            runs.append((plan.labels[start], start, i))
            start = i
    return runs


def plan_to_geojson(plan: Optional[PathPolyline]) -> Dict[str, Any]:
    """
    One LineString per label run. Each feature also carries the junction
    vertex owned by the previous run so the drawn line is continuous;
    `vertex_count` is the number of vertices the run owns.
    """
    features = []
    if plan is not None:
        v = plan.vertices
        for index, (role, start, stop) in enumerate(_role_runs(plan)):
            lo = start - 1 if start > 0 else 0
            hi = stop if stop - lo >= 2 else min(stop + 1, plan.n_vertices)
            features.append({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": [[float(x), float(y)] for x, y in v[lo:hi]]},
                "properties": {"role": role.value, "run": index, "vertex_count": stop - start,
                               "shared_start": start > 0},
            })
    return {"type": "FeatureCollection", "features": features}


def load_plan(file) -> PathPolyline:
    """Read a plan written by emit_outputs back into a labelled polyline"""
    path = Path(file)
    data = json.loads(path.read_text(encoding="utf-8"))
    points, labels = [], []
    for feature in sorted(data.get("features", []), key=lambda f: f["properties"]["run"]):
        properties = feature["properties"]
        coords = feature["geometry"]["coordinates"]
        if properties.get("shared_start"):
            coords = coords[1:]
        count = int(properties["vertex_count"])
        points.extend(coords[:count])
        labels.extend([PathRole(properties["role"])] * count)
    if len(points) < 2:
        raise InputError(f"{path}: plan has fewer than 2 vertices")
    return PathPolyline.from_points(np.array(points, dtype=float), labels)


def write_figure(path, layout: Optional[FieldLayout], plan: Optional[PathPolyline],
                 instances: Sequence[InstanceResult] = ()) -> Path:
    """Contour, headland, lanes, plan coloured by role and one box per smoothed instance"""
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 8))
        if layout is not None:
            contour = np.vstack([layout.contour, layout.contour[:1]])
            ax.plot(contour[:, 0], contour[:, 1], color="black", linewidth=1.2, label="contour")
            headland = np.asarray(layout.headland.vertices)
            ax.plot(headland[:, 0], headland[:, 1], color="grey", linestyle="--", linewidth=0.8, label="headland")
            for lane in layout.lanes:
                ax.plot(lane.vertices[:, 0], lane.vertices[:, 1], color="lightgrey", linewidth=0.8)
        if plan is not None:
            for role, start, stop in _role_runs(plan):
                lo = start - 1 if start > 0 else 0
                xy = plan.vertices[lo:stop]
                ax.plot(xy[:, 0], xy[:, 1], color=ROLE_COLOURS[role], linewidth=1.0)
        for k, result in enumerate(instances):
            x0, y0, x1, y1 = LineString(result.smoothed.polyline.vertices).buffer(2.0).bounds
            ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, fill=False, edgecolor="darkorange", linewidth=0.6))
            ax.annotate(str(k), (x1, y1), fontsize=6, color="darkorange")
        ax.set_aspect("equal")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def emit_outputs(plan: Optional[PathPolyline], report: RunReport, raster: Optional[CoverageRaster], out_dir,
                 layout: Optional[FieldLayout] = None,
                 instances: Sequence[InstanceResult] = ()) -> Dict[str, Path]:
    """Write plan.geojson, report.csv, figure.svg and (with a raster) coverage.pgm"""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = {"plan": out / "plan.geojson"}
        written["plan"].write_text(
            json.dumps(plan_to_geojson(plan), sort_keys=True, indent=2, separators=(",", ": ")) + "\n",
            encoding="utf-8",
        )
        written["report"] = report.to_csv(out / "report.csv")
        written["figure"] = write_figure(out / "figure.svg", layout, plan, instances)
        if raster is not None:
            written["coverage"] = raster.to_pgm(out / "coverage.pgm")
    except OSError as e:
        raise OSError(f"Failed to write outputs to {out}: {e}") from e
    logger.info(f"Wrote {', '.join(p.name for p in written.values())} to {out}")
    return written


# --------------------------------------------------------------------------- command line

def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value run configuration file")
    parser.add_argument("--out", default=str(Config.OUTPUT_DIR), help="output directory")
    for f in fields(RunConfig):
        parser.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None, metavar="VALUE")


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name) is not None}
    return load_run_config(args.config, overrides)


def _layout(args: argparse.Namespace, cfg: RunConfig) -> FieldLayout:
    heading = math.radians(cfg.lane_heading_deg) if cfg.lane_heading_deg is not None else None
    return load_field(args.field, cfg.operating_width_m, heading)


def _parse_floats(text: str) -> List[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="headland-smoother",
                                     description="LP-based smoothing of headland corners and transitions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="full pipeline on a field")
    p.add_argument("field")
    _add_run_flags(p)

    for name, help_text in (("smooth-corner", "smooth one headland corner"),
                            ("smooth-transition", "smooth one headland/lane transition")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("field")
        p.add_argument("--index", type=int, default=0, help="instance index among segments of this kind")
        _add_run_flags(p)

    p = sub.add_parser("simulate-saturated", help="saturated-steering turn for delta0 = 0 and delta_min")
    p.add_argument("--dt", type=float, default=0.01, help="sampling time T_s [s]")
    _add_run_flags(p)

    p = sub.add_parser("sweep-radius", help="transition deviations over Dubins radii")
    p.add_argument("field")
    p.add_argument("--radii", default="5 5.33 7")
    _add_run_flags(p)

    p = sub.add_parser("sweep-spacing", help="LP size and jaggedness over grid spacings")
    p.add_argument("field")
    p.add_argument("--spacings", default="0.5 1 2")
    _add_run_flags(p)
    return parser


def _configure_logging(profile: Type[Config]) -> None:
    """Validate the active profile, create its directories and set up logging at its level"""
    profile.validate_config()
    profile.ensure_directories()
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if profile.LOG_FILE_PATH:
        handlers.append(logging.FileHandler(profile.LOG_FILE_PATH))
    logging.basicConfig(
        level=getattr(logging, profile.LOG_LEVEL.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _cmd_plan(args, cfg: RunConfig) -> int:
    layout = _layout(args, cfg)
    result = run_pipeline(layout, cfg)
    emit_outputs(result.plan, result.report, result.raster, args.out, layout, result.instances)
    print(f"✅ {len(result.instances)} instances smoothed, outputs in {args.out}")
    if result.failures:
        print(f"❌ {len(result.failures)} instances failed")
        for segment_id, error in result.failures.items():
            print(f"   {segment_id}: {error}")
        return 2
    return 0


def _cmd_single(args, cfg: RunConfig, corner: bool) -> int:
    layout = _layout(args, cfg)
    plan, segments, tasks = prepare_tasks(layout, cfg)
    chosen = [t for t in tasks if t.segment.kind.is_transition != corner]
    if not 0 <= args.index < len(chosen):
        raise InputError(f"Instance index {args.index} out of range ({len(chosen)} available)")
    task = chosen[args.index]
    try:
        result = smooth_instance(task.segment, plan, cfg, layout.contour, layout.headland.vertices,
                                 Config.LP_DUMP_DIR or None)
    except SmootherError as e:
        print(f"❌ {task.task_id}: {e}")
        return 2
    report = RunReport([_report_row(task.segment, result, plan, cfg)], cfg.record_timings)
    stitched = stitch_all(plan, [(task.segment, result.smoothed)], cfg.theta_edge)
    emit_outputs(result.smoothed.polyline, report, None, args.out, layout, [result])
    d = result.smoothed.diagnostics
    print(f"✅ {task.task_id}: N={d.N}, n_u={d.n_u}, rows={d.n_cstrts}, max|e_y|={d.max_abs_e_y:.3f} m, "
          f"plan length {stitched.length:.1f} m")
    return 0


def _cmd_saturated(args, cfg: RunConfig) -> int:
    from .studies import saturated_study, write_saturation_csv

    params: VehicleParams = cfg.vehicle_params()
    results = saturated_study(params, args.dt, params.v_ref)
    path = write_saturation_csv(results, args.dt, Path(args.out) / "saturated.csv")
    for r in results:
        print(f"📊 delta0={math.degrees(r.delta0):.1f} deg: envelope radius {r.envelope_radius:.3f} m "
              f"(R_min {params.min_turning_radius:.3f} m)")
    print(f"✅ Trajectories written to {path}")
    return 0


def _cmd_sweep(args, cfg: RunConfig, radius: bool) -> int:
    from .studies import sweep_radius, sweep_spacing, write_rows_csv

    layout = _layout(args, cfg)
    if radius:
        rows = sweep_radius(layout, cfg, _parse_floats(args.radii))
        path = write_rows_csv(rows, Path(args.out) / "sweep_radius.csv")
    else:
        rows = sweep_spacing(layout, cfg, _parse_floats(args.spacings))
        path = write_rows_csv(rows, Path(args.out) / "sweep_spacing.csv")
    for row in rows:
        print(f"📊 {row}")
    print(f"✅ Sweep written to {path}")
    return 2 if any(row.failed for row in rows) else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging(get_config())
        cfg = _run_config(args)
        if args.command == "plan":
            return _cmd_plan(args, cfg)
        if args.command in ("smooth-corner", "smooth-transition"):
            return _cmd_single(args, cfg, corner=args.command == "smooth-corner")
        if args.command == "simulate-saturated":
            return _cmd_saturated(args, cfg)
        return _cmd_sweep(args, cfg, radius=args.command == "sweep-radius")
    except (InputError, ValueError, FileNotFoundError) as e:
        logger.error(f"{e}")
        print(f"❌ {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
