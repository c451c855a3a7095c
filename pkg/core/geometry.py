"""
Planar Geometry Primitives

Polylines with arclength tables, path-aligned reference frames, projection
between global and path-aligned coordinates, polygon erosion and
corner-cut smoothing. All values are immutable after construction.

Sign convention: lateral deviation e_y is positive to the left of travel.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
import shapely
from scipy.optimize import brentq
from shapely.geometry import LineString, Point, Polygon
from shapely.geometry.polygon import orient

from .errors import EmptyOffset, InvalidPath, OutOfDomain

logger = logging.getLogger(__name__)

ARCLENGTH_TOL = 1e-9
DUPLICATE_TOL = 1e-12
STATION_MERGE = 1e-6


class PathRole(Enum):
    """Role tag of a path vertex"""
    HEADLAND = "headland"
    LANE = "lane"
    TRANSITION = "transition"


@dataclass(frozen=True)
class Point2:
    """Planar point in metres"""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Non-finite point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def wrap_angle(angle):
    """Wrap to [-pi, pi)"""
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


def as_xy(points) -> np.ndarray:
    """Coerce points, polylines or shapely geometries to an (n, 2) float array"""
    if isinstance(points, PathPolyline):
        return np.array(points.vertices, dtype=float)
    if isinstance(points, Polygon):
        return np.asarray(points.exterior.coords, dtype=float)[:, :2]
    if isinstance(points, LineString):
        return np.asarray(points.coords, dtype=float)[:, :2]
    if isinstance(points, Point2):
        return points.as_array()[None, :]
    rows = [p.as_array() if isinstance(p, Point2) else p for p in points]
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidPath(f"Expected (n, 2) coordinates, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PathPolyline:
    """
    Ordered planar vertices with per-vertex roles and an arclength table.
    """

    vertices: np.ndarray
    labels: Tuple[PathRole, ...]
    cumulative_s: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        s = np.array(self.cumulative_s, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise InvalidPath(f"A path needs at least 2 vertices, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidPath("Path vertices must be finite")
        if len(self.labels) != len(v) or s.shape != (len(v),):
            raise InvalidPath("Labels and arclength table must match the vertex count")
        seg = np.hypot(*np.diff(v, axis=0).T)
        if np.any(seg <= DUPLICATE_TOL):
            raise InvalidPath("Duplicate consecutive vertices")
        if abs(s[0]) > ARCLENGTH_TOL or np.any(np.abs(np.diff(s) - seg) > ARCLENGTH_TOL):
            raise InvalidPath("Arclength table does not match vertex distances")
        v.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "cumulative_s", s)
        object.__setattr__(self, "labels", tuple(PathRole(label) for label in self.labels))

    @classmethod
    def from_points(cls, points, labels: Optional[Sequence] = None,
                    role: PathRole = PathRole.HEADLAND,
                    drop_duplicates: bool = False) -> "PathPolyline":
        xy = as_xy(points)
        if labels is None:
            labels = (role,) * len(xy)
        labels = tuple(PathRole(label) for label in labels)
        if len(labels) != len(xy):
            raise InvalidPath("One label per vertex required")
        if drop_duplicates and len(xy) > 1:
            keep = np.ones(len(xy), dtype=bool)
            keep[1:] = np.hypot(*np.diff(xy, axis=0).T) > DUPLICATE_TOL
            xy = xy[keep]
            labels = tuple(label for label, k in zip(labels, keep) if k)
        if len(xy) < 2:
            raise InvalidPath("Fewer than 2 distinct vertices")
        seg = np.hypot(*np.diff(xy, axis=0).T)
        cumulative = np.concatenate([[0.0], np.cumsum(seg)])
        return cls(xy, labels, cumulative)

    @property
    def length(self) -> float:
        return float(self.cumulative_s[-1])

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def is_closed(self) -> bool:
        return bool(np.hypot(*(self.vertices[0] - self.vertices[-1])) < ARCLENGTH_TOL)

    def segment_headings(self) -> np.ndarray:
        d = np.diff(self.vertices, axis=0)
        return np.arctan2(d[:, 1], d[:, 0])

    def turn_angles(self) -> np.ndarray:
        """Signed heading change at each interior vertex (left positive)"""
        return wrap_angle(np.diff(self.segment_headings()))

    def total_turning(self) -> float:
        return float(np.sum(np.abs(self.turn_angles())))

    def to_linestring(self) -> LineString:
        return LineString(self.vertices)

    def with_labels(self, labels: Sequence[PathRole]) -> "PathPolyline":
        return PathPolyline(self.vertices, tuple(labels), self.cumulative_s)

    def point_at(self, s: float) -> np.ndarray:
        return _interpolate(self.vertices, self.cumulative_s, np.array([s]))[0][0]


def _interpolate(vertices: np.ndarray, cumulative: np.ndarray, stations: np.ndarray):
    """Positions at arclength stations plus the segment index and fraction"""
    n = len(vertices)
    idx = np.clip(np.searchsorted(cumulative, stations, side="right") - 1, 0, n - 2)
    span = cumulative[idx + 1] - cumulative[idx]
    frac = np.clip((stations - cumulative[idx]) / span, 0.0, 1.0)
    xy = vertices[idx] + frac[:, None] * (vertices[idx + 1] - vertices[idx])
    return xy, idx, frac


def resample_uniform(path: PathPolyline, spacing: float, keep_vertices: bool = True) -> PathPolyline:
    """
    Resample at arclength multiples of spacing plus the endpoints.

    With keep_vertices the original interior vertices are kept too, so the
    output traces the input exactly and preserves its length.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    total = path.length
    merge = STATION_MERGE * spacing
    stations = np.arange(0, int(math.floor(total / spacing)) + 1) * spacing
    stations = stations[stations < total - merge]

    if keep_vertices and path.n_vertices > 2:
        interior = np.asarray(path.cumulative_s[1:-1])
        interior = interior[(interior > merge) & (interior < total - merge)]
        if interior.size:
            pos = np.searchsorted(interior, stations)
            near = np.zeros(len(stations), dtype=bool)
            for cand in (pos - 1, pos):
                ok = (cand >= 0) & (cand < len(interior))
                near[ok] |= np.abs(interior[cand[ok]] - stations[ok]) <= merge
            near[0] = False
            stations = np.sort(np.concatenate([stations[~near], interior]))
    stations = np.append(stations, total)

    xy, idx, frac = _interpolate(path.vertices, path.cumulative_s, stations)
    xy[0] = path.vertices[0]
    xy[-1] = path.vertices[-1]
    # a sample takes the role of the vertex its segment leads to
    labels = [path.labels[i] if f <= 0.0 else path.labels[i + 1] for i, f in zip(idx, frac)]
    labels[0] = path.labels[0]
    labels[-1] = path.labels[-1]
    return PathPolyline.from_points(xy, labels)


def three_point_curvature(xy: np.ndarray) -> np.ndarray:
    """Signed curvature of the circle through each vertex and its neighbours"""
    kappa = np.zeros(len(xy))
    if len(xy) < 3:
        return kappa
    a = xy[1:-1] - xy[:-2]
    b = xy[2:] - xy[1:-1]
    c = xy[2:] - xy[:-2]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    denom = np.hypot(*a.T) * np.hypot(*b.T) * np.hypot(*c.T)
    inner = np.zeros(len(cross))
    ok = denom > 0
    inner[ok] = 2.0 * cross[ok] / denom[ok]
    kappa[1:-1] = inner
    kappa[0] = kappa[1]
    kappa[-1] = kappa[-2]
    return kappa


@dataclass(frozen=True)
class ReferenceFrame:
    """
    Sampled path-aligned coordinate system: stations s, centreline
    positions, unwrapped headings and curvatures per sample.
    """

    s: np.ndarray
    xy: np.ndarray
    psi: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        xy = np.array(self.xy, dtype=float)
        psi = np.array(self.psi, dtype=float)
        kappa = np.array(self.kappa, dtype=float)
        n = len(s)
        if n < 2 or xy.shape != (n, 2) or psi.shape != (n,) or kappa.shape != (n,):
            raise InvalidPath("Inconsistent reference frame sample arrays")
        if np.any(np.diff(s) <= 0):
            raise InvalidPath("Frame stations must be strictly increasing")
        if not (np.all(np.isfinite(kappa)) and np.all(np.isfinite(psi))):
            raise InvalidPath("Frame headings and curvatures must be finite")
        if np.any(np.abs(np.diff(psi)) > np.pi):
            raise InvalidPath("Frame heading jumps by more than pi")
        for arr, name in ((s, "s"), (xy, "xy"), (psi, "psi"), (kappa, "kappa")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self) -> int:
        return len(self.s)

    @property
    def n_intervals(self) -> int:
        return len(self.s) - 1

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.s)

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    def interval_curvature(self) -> np.ndarray:
        """Heading change per unit arclength on each interval"""
        return np.diff(self.psi) / np.diff(self.s)

    def normals(self) -> np.ndarray:
        return np.column_stack([-np.sin(self.psi), np.cos(self.psi)])

    def samples(self) -> Iterator[Tuple[float, Point2, float, float]]:
        for s, (x, y), psi, kappa in zip(self.s, self.xy, self.psi, self.kappa):
            yield float(s), Point2(float(x), float(y)), float(psi), float(kappa)

    def as_polyline(self, role: PathRole = PathRole.HEADLAND) -> PathPolyline:
        return PathPolyline.from_points(self.xy, role=role)


def build_frame(path: PathPolyline, stations: Optional[Sequence[float]] = None) -> ReferenceFrame:
    """
    Build a reference frame on the vertices of a path.

    Headings average the adjacent segment directions, curvature uses the
    circumscribed circle of three consecutive vertices. Optional stations
    replace the chord arclength (e.g. exact arclength along a sampled curve).
    """
    v = np.asarray(path.vertices, dtype=float)
    n = len(v)
    if n < 3:
        raise InvalidPath(f"A reference frame needs at least 3 vertices, got {n}")
    d = np.diff(v, axis=0)
    if np.any(np.hypot(d[:, 0], d[:, 1]) <= DUPLICATE_TOL):
        raise InvalidPath("Duplicate consecutive vertices")
    s = np.asarray(path.cumulative_s if stations is None else stations, dtype=float)
    if s.shape != (n,):
        raise InvalidPath(f"Expected {n} stations, got {s.shape}")

    headings = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    psi = np.empty(n)
    psi[0] = headings[0]
    psi[-1] = headings[-1]
    psi[1:-1] = 0.5 * (headings[:-1] + headings[1:])
    return ReferenceFrame(s=s, xy=v, psi=psi, kappa=three_point_curvature(v))


def _locate(frame: ReferenceFrame, s: np.ndarray):
    idx = np.clip(np.searchsorted(frame.s, s, side="right") - 1, 0, frame.n_intervals - 1)
    frac = np.clip((s - frame.s[idx]) / (frame.s[idx + 1] - frame.s[idx]), 0.0, 1.0)
    pos = frame.xy[idx] + frac[:, None] * (frame.xy[idx + 1] - frame.xy[idx])
    psi = frame.psi[idx] + frac * (frame.psi[idx + 1] - frame.psi[idx])
    return pos, psi


def frame_to_global_array(frame: ReferenceFrame, s, e_y, e_psi=None) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised frame_to_global: positions (k, 2) and headings (k,)"""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    e_y = np.broadcast_to(np.asarray(e_y, dtype=float), s.shape)
    e_psi = np.zeros_like(s) if e_psi is None else np.broadcast_to(np.asarray(e_psi, dtype=float), s.shape)
    tol = ARCLENGTH_TOL * max(1.0, abs(frame.s[-1]))
    if np.any(s < frame.s[0] - tol) or np.any(s > frame.s[-1] + tol):
        raise OutOfDomain(f"Station outside [{frame.s[0]}, {frame.s[-1]}]")
    pos, psi = _locate(frame, s)
    normal = np.column_stack([-np.sin(psi), np.cos(psi)])
    return pos + e_y[:, None] * normal, psi + e_psi


def frame_to_global(frame: ReferenceFrame, s: float, e_y: float, e_psi: float = 0.0) -> Tuple[Point2, float]:
    """Global position and heading of path-aligned coordinates (s, e_y, e_psi)"""
    xy, psi = frame_to_global_array(frame, [s], [e_y], [e_psi])
    return Point2(float(xy[0, 0]), float(xy[0, 1])), float(psi[0])


def project_to_frame(frame: ReferenceFrame, p) -> Tuple[float, float]:
    """
    Path-aligned coordinates (s, e_y) of a global point.

    The foot point is where the offset to p is normal to the heading
    interpolated along the interval, so frame_to_global inverts it exactly.
    Among several foot points the smallest |e_y| wins, ties go to smaller s.
    """
    p = as_xy(p)[0] if isinstance(p, Point2) else np.asarray(p, dtype=float)
    if LineString(frame.xy).distance(Point(p)) > frame.length:
        raise OutOfDomain(f"Point {tuple(p)} is too far from the frame")

    xy, psi, s = frame.xy, frame.psi, frame.s
    offset = p - xy
    g = offset[:, 0] * np.cos(psi) + offset[:, 1] * np.sin(psi)

    def tangential(tau: float, i: int) -> float:
        c = xy[i] + tau * (xy[i + 1] - xy[i])
        heading = psi[i] + tau * (psi[i + 1] - psi[i])
        r = p - c
        return r[0] * math.cos(heading) + r[1] * math.sin(heading)

    candidates = []
    for i in np.nonzero(g == 0.0)[0]:
        candidates.append((float(s[i]), int(min(i, frame.n_intervals - 1)), 0.0 if i < frame.n_intervals else 1.0))
    for i in np.nonzero((g[:-1] > 0.0) & (g[1:] < 0.0))[0]:
        tau = brentq(tangential, 0.0, 1.0, args=(int(i),), xtol=1e-15)
        candidates.append((float(s[i] + tau * (s[i + 1] - s[i])), int(i), tau))

    if not candidates:
        # no foot point: clamp to the nearer end
        station = float(s[0]) if g[0] < 0.0 else float(s[-1])
        pos, heading = _locate(frame, np.array([station]))
        r = p - pos[0]
        return station, float(-r[0] * math.sin(heading[0]) + r[1] * math.cos(heading[0]))

    best = None
    for station, i, tau in sorted(candidates):
        c = xy[i] + tau * (xy[i + 1] - xy[i])
        heading = psi[i] + tau * (psi[i + 1] - psi[i])
        r = p - c
        e_y = -r[0] * math.sin(heading) + r[1] * math.cos(heading)
        if best is None or abs(e_y) < abs(best[1]) - ARCLENGTH_TOL:
            best = (station, e_y)
    return best[0], float(best[1])


def _polygon(polygon) -> Polygon:
    if isinstance(polygon, Polygon):
        return polygon
    return Polygon(as_xy(polygon))


def inward_offset(polygon, distance: float) -> np.ndarray:
    """
    Erode a simple polygon by distance. Returns a closed, counter-clockwise
    vertex array (first vertex repeated at the end).
    """
    poly = _polygon(polygon)
    if not poly.is_valid:
        raise InvalidPath("Polygon is not simple")
    if not distance > 0:
        raise ValueError(f"Offset distance must be positive, got {distance}")

    eroded = poly.buffer(-distance, join_style="mitre")
    if eroded.is_empty or eroded.area <= 0.0:
        raise EmptyOffset(f"Offset by {distance} m empties the polygon")
    if eroded.geom_type == "MultiPolygon":
        parts = sorted(eroded.geoms, key=lambda g: g.area, reverse=True)
        logger.warning(f"Offset split the polygon into {len(parts)} parts; keeping the largest")
        eroded = parts[0]
    eroded = orient(eroded, sign=1.0)
    return np.asarray(eroded.exterior.coords, dtype=float)[:, :2]


def roll_loop_start(loop, point) -> np.ndarray:
    """Re-start a closed loop at its point nearest to `point`"""
    xy = as_xy(loop)
    if np.hypot(*(xy[0] - xy[-1])) > ARCLENGTH_TOL:
        xy = np.vstack([xy, xy[:1]])
    ring = LineString(xy)
    d = ring.project(Point(np.asarray(point, dtype=float)))
    start = np.asarray(ring.interpolate(d).coords[0][:2])
    cumulative = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))])
    unique, unique_s = xy[:-1], cumulative[:-1]
    after = unique[unique_s > d + STATION_MERGE]
    before = unique[unique_s < d - STATION_MERGE]
    return np.vstack([start, after, before, start])


def longest_edge_midpoint(loop) -> np.ndarray:
    xy = as_xy(loop)
    lengths = np.hypot(*np.diff(xy, axis=0).T)
    k = int(np.argmax(lengths))
    return 0.5 * (xy[k] + xy[k + 1])


def corner_cut_smooth(path: PathPolyline, iterations: int = 2) -> PathPolyline:
    """
    Endpoint-preserving 1-2-1 vertex averaging, applied `iterations` times.
    Vertex count and labels are unchanged.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be non-negative, got {iterations}")
    v = np.array(path.vertices, dtype=float)
    for _ in range(iterations):
        if len(v) < 3:
            break
        v[1:-1] = 0.25 * (v[:-2] + 2.0 * v[1:-1] + v[2:])
    return PathPolyline.from_points(v, path.labels)


def distances_to_line(xy: np.ndarray, line) -> np.ndarray:
    """Distance from each point to a polyline or polygon boundary"""
    geometry = line if hasattr(line, "geom_type") else LineString(as_xy(line))
    return shapely.distance(shapely.points(np.asarray(xy, dtype=float)), geometry)


GeometryLike = Union[PathPolyline, np.ndarray, Sequence]
