"""
Coverage Analysis

Swath rasterisation with per-pass counting, coverage-gap detection,
tyre-trace (compacted area) metrics and the cubic Bezier baseline.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import LineString, MultiLineString
from shapely.ops import unary_union

from .geometry import PathPolyline, PathRole, as_xy, resample_uniform

logger = logging.getLogger(__name__)

COLLINEAR_TOL = 1e-9


@dataclass
class CoverageRaster:
    """Pass counts on a regular grid; row 0 is the lowest y"""

    origin: np.ndarray
    cell: float
    counts: np.ndarray
    last_s: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.cell > 0:
            raise ValueError(f"Cell size must be positive, got {self.cell}")
        self.origin = np.asarray(self.origin, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int32)
        if np.any(self.counts < 0):
            raise ValueError("Pass counts must be non-negative")

    @classmethod
    def empty(cls, bounds: Sequence[float], cell: float) -> "CoverageRaster":
        """Raster covering bounds (min_x, min_y, max_x, max_y)"""
        min_x, min_y, max_x, max_y = bounds
        if not (np.isfinite(cell) and cell > 0):
            raise ValueError(f"Cell size must be positive, got {cell}")
        if not (max_x >= min_x and max_y >= min_y):
            raise ValueError(f"Invalid raster bounds {tuple(bounds)}")
        width = max(int(np.ceil((max_x - min_x) / cell)), 1)
        height = max(int(np.ceil((max_y - min_y) / cell)), 1)
        return cls(np.array([min_x, min_y]), cell, np.zeros((height, width), dtype=np.int32))

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def cell_area(self) -> float:
        return self.cell * self.cell

    def cell_centres(self) -> Tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.cell
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.cell
        return np.meshgrid(xs, ys)

    def covered_area(self) -> float:
        return float(np.count_nonzero(self.counts)) * self.cell_area

    def overlap_area(self) -> float:
        return float(np.count_nonzero(self.counts > 1)) * self.cell_area

    def to_pgm(self, path) -> Path:
        """Plain PGM (P2); brightness falls with pass count, top row = highest y"""
        path = Path(path)
        levels = 255
        image = np.flipud(np.clip(levels - 64 * self.counts, 0, levels))
        lines = ["P2", f"{self.width} {self.height}", str(levels)]
        lines += [" ".join(str(int(v)) for v in row) for row in image]
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
        return path

    def to_csv(self, path) -> Path:
        """One row per covered cell: x, y, passes"""
        path = Path(path)
        X, Y = self.cell_centres()
        mask = self.counts > 0
        rows = ["x,y,passes"]
        rows += [f"{x:.3f},{y:.3f},{int(c)}" for x, y, c in zip(X[mask], Y[mask], self.counts[mask])]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        return path


def merge_collinear(xy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Drop vertices where the path goes straight on; returns vertices and their arclength"""
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))])
    if len(xy) < 3:
        return xy, s
    a = xy[1:-1] - xy[:-2]
    b = xy[2:] - xy[1:-1]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.sum(a * b, axis=1)
    straight = (np.abs(cross) <= COLLINEAR_TOL * np.hypot(*a.T) * np.hypot(*b.T)) & (dot > 0)
    keep = np.concatenate([[True], ~straight, [True]])
    return xy[keep], s[keep]


def _window(raster: CoverageRaster, lo: np.ndarray, hi: np.ndarray):
    c0 = max(int(np.floor((lo[0] - raster.origin[0]) / raster.cell)), 0)
    c1 = min(int(np.ceil((hi[0] - raster.origin[0]) / raster.cell)), raster.width)
    r0 = max(int(np.floor((lo[1] - raster.origin[1]) / raster.cell)), 0)
    r1 = min(int(np.ceil((hi[1] - raster.origin[1]) / raster.cell)), raster.height)
    if c1 <= c0 or r1 <= r0:
        return None
    xs = raster.origin[0] + (np.arange(c0, c1) + 0.5) * raster.cell
    ys = raster.origin[1] + (np.arange(r0, r1) + 0.5) * raster.cell
    X, Y = np.meshgrid(xs, ys)
    return (slice(r0, r1), slice(c0, c1)), X, Y


def _visit(raster: CoverageRaster, window, mask: np.ndarray, s_cell: np.ndarray, w: float) -> None:
    """Count a cell again only when the path returns after more than w of arclength"""
    counts = raster.counts[window]
    last = raster.last_s[window]
    fresh = mask & (s_cell - last > w)
    counts[fresh] += 1
    last[mask] = np.maximum(last[mask], s_cell[mask])


def rasterize_swath(path, w: float, cell: float, bounds: Optional[Sequence[float]] = None,
                    raster: Optional[CoverageRaster] = None) -> CoverageRaster:
    """
    Sweep a swath of width w along the path: flat ends, round joins at
    interior vertices. Pass an existing raster to accumulate another path.
    """
    if not w > 0:
        raise ValueError(f"Operating width must be positive, got {w}")
    xy = as_xy(path)
    half = 0.5 * w
    if raster is None:
        if bounds is None:
            lo, hi = xy.min(axis=0) - w, xy.max(axis=0) + w
            bounds = (lo[0], lo[1], hi[0], hi[1])
        raster = CoverageRaster.empty(bounds, cell)
    raster.last_s = np.full(raster.counts.shape, -np.inf)

    vertices, stations = merge_collinear(xy)
    for k in range(len(vertices) - 1):
        a, b = vertices[k], vertices[k + 1]
        length = float(np.hypot(*(b - a)))
        if length <= 0.0:
            continue
        found = _window(raster, np.minimum(a, b) - half, np.maximum(a, b) + half)
        if found is not None:
            window, X, Y = found
            d = (b - a) / length
            rx, ry = X - a[0], Y - a[1]
            along = rx * d[0] + ry * d[1]
            across = d[0] * ry - d[1] * rx
            mask = (along >= 0.0) & (along <= length) & (np.abs(across) <= half)
            _visit(raster, window, mask, stations[k] + along, w)
        if 0 < k + 1 < len(vertices) - 1:
            found = _window(raster, b - half, b + half)
            if found is not None:
                window, X, Y = found
                mask = np.hypot(X - b[0], Y - b[1]) <= half
                _visit(raster, window, mask, np.full(X.shape, stations[k + 1]), w)
    raster.last_s = None
    return raster


@dataclass(frozen=True)
class GapRegion:
    label: int
    n_cells: int
    area: float
    centroid: Tuple[float, float]


@dataclass(frozen=True)
class GapReport:
    gap_cells: int
    gap_area: float
    regions: List[GapRegion] = field(default_factory=list)


def find_gaps(raster: CoverageRaster, field_polygon) -> GapReport:
    """Field-interior cells never covered, grouped into 4-connected regions"""
    polygon = field_polygon if hasattr(field_polygon, "geom_type") else shapely.Polygon(as_xy(field_polygon))
    X, Y = raster.cell_centres()
    inside = shapely.contains_xy(polygon, X, Y)
    gaps = inside & (raster.counts == 0)
    labels, count = ndimage.label(gaps)
    regions = []
    for label in range(1, count + 1):
        cells = labels == label
        n = int(cells.sum())
        regions.append(GapRegion(label, n, n * raster.cell_area,
                                 (float(X[cells].mean()), float(Y[cells].mean()))))
    regions.sort(key=lambda r: (-r.n_cells, r.centroid))
    total = int(gaps.sum())
    return GapReport(total, total * raster.cell_area, regions)


def _bernstein(t: np.ndarray) -> np.ndarray:
    u = 1.0 - t
    return np.column_stack([u ** 3, 3 * t * u ** 2, 3 * t ** 2 * u, t ** 3])


def chord_parameters(points: np.ndarray) -> np.ndarray:
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(points, axis=0).T))])
    return s / s[-1] if s[-1] > 0 else np.linspace(0.0, 1.0, len(points))


def fit_bezier3(points, parameters=None) -> np.ndarray:
    """
    Least-squares cubic Bezier control points with the end points fixed.
    Falls back to a straight segment when the system is rank deficient.
    """
    pts = as_xy(points)
    if len(pts) < 4:
        raise ValueError(f"A cubic fit needs at least 4 points, got {len(pts)}")
    t = chord_parameters(pts) if parameters is None else np.asarray(parameters, dtype=float)
    basis = _bernstein(t)
    p0, p3 = pts[0], pts[-1]
    rhs = pts - np.outer(basis[:, 0], p0) - np.outer(basis[:, 3], p3)
    inner, _, rank, _ = np.linalg.lstsq(basis[:, 1:3], rhs, rcond=None)
    if rank < 2:
        logger.debug("Rank-deficient Bezier fit; using a straight segment")
        inner = np.array([p0 + (p3 - p0) / 3.0, p0 + 2.0 * (p3 - p0) / 3.0])
    return np.vstack([p0, inner, p3])


def evaluate_bezier3(control: np.ndarray, t) -> np.ndarray:
    return _bernstein(np.atleast_1d(np.asarray(t, dtype=float))) @ np.asarray(control, dtype=float)


def bezier3_curvature(control: np.ndarray, t) -> np.ndarray:
    """Signed curvature from the analytic first and second derivatives"""
    P = np.asarray(control, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    first = 3 * ((1 - t) ** 2 * (P[1] - P[0]) + 2 * (1 - t) * t * (P[2] - P[1]) + t ** 2 * (P[3] - P[2]))
    second = 6 * ((1 - t) * (P[2] - 2 * P[1] + P[0]) + t * (P[3] - 2 * P[2] + P[1]))
    cross = first[:, 0] * second[:, 1] - first[:, 1] * second[:, 0]
    speed = np.hypot(first[:, 0], first[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(speed > 0, cross / speed ** 3, 0.0)
    return kappa


def bezier3_baseline(points, ds: float = 1.0, samples: int = 2001) -> PathPolyline:
    """Fitted cubic Bezier curve sampled at ds"""
    control = fit_bezier3(points)
    dense = evaluate_bezier3(control, np.linspace(0.0, 1.0, samples))
    curve = PathPolyline.from_points(dense, role=PathRole.HEADLAND, drop_duplicates=True)
    return resample_uniform(curve, ds, keep_vertices=False)


@dataclass(frozen=True)
class BezierBaselineResult:
    polyline: PathPolyline
    control: np.ndarray
    max_curvature: float
    drivable: bool
    fit_time: float


def evaluate_bezier_baseline(points, ds: float, min_turning_radius: float,
                             samples: int = 2001) -> BezierBaselineResult:
    """Fit, sample and check the curvature bound 1 / R_min"""
    started = time.perf_counter()
    control = fit_bezier3(points)
    polyline = bezier3_baseline(points, ds, samples)
    fit_time = time.perf_counter() - started
    max_curvature = float(np.max(np.abs(bezier3_curvature(control, np.linspace(0.0, 1.0, samples)))))
    return BezierBaselineResult(polyline, control, max_curvature,
                                max_curvature <= 1.0 / min_turning_radius, fit_time)


@dataclass(frozen=True)
class TyreTraceMetrics:
    trace_area: float
    overlap_area: float


def _label_runs(path: PathPolyline) -> List[np.ndarray]:
    runs, start = [], 0
    for i in range(1, path.n_vertices):
        if path.labels[i] != path.labels[i - 1] or i == path.n_vertices - 1:
            end = i
            if end - start >= 1:
                runs.append(np.asarray(path.vertices[start:end + 1]))
            start = i
    return runs


def tyre_trace_metrics(path: PathPolyline, track: float, tyre_width: float) -> TyreTraceMetrics:
    """
    Area compacted by two tyre bands at +-track/2 and the area driven over
    more than once (traces crossing between label runs counted on each run).
    """
    if not (track > 0 and tyre_width > 0):
        raise ValueError("Track and tyre width must be positive")
    pieces = []
    for run in _label_runs(path):
        line = LineString(run)
        for side in (0.5 * track, -0.5 * track):
            offset = line.offset_curve(side, join_style="round")
            if not offset.is_empty:
                pieces.append(offset.buffer(0.5 * tyre_width, cap_style="flat"))
    if not pieces:
        return TyreTraceMetrics(0.0, 0.0)
    union = unary_union(pieces)
    overlap = max(sum(p.area for p in pieces) - union.area, 0.0)
    return TyreTraceMetrics(float(union.area), float(overlap))
