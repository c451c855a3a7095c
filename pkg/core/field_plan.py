"""
Field layout plumbing: headland synthesis, straight lanes and the
coverage plan that strings run-in, lanes, headland loop and run-out
together.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from shapely.geometry import LineString, Point, Polygon

from config.config import TURN_MODES
from .errors import InputError
from .geometry import (
    PathPolyline, PathRole, as_xy, inward_offset, longest_edge_midpoint, resample_uniform,
    roll_loop_start, wrap_angle,
)

logger = logging.getLogger(__name__)

RING_CORNER_TURN = math.radians(20.0)
JUNCTION_MERGE_M = 1e-6


@dataclass(frozen=True)
class FieldLayout:
    """Field contour, closed headland loop, lanes and operating width"""

    contour: np.ndarray
    headland: PathPolyline
    lanes: List[PathPolyline] = field(default_factory=list)
    operating_width: float = 20.0

    def __post_init__(self):
        if not self.operating_width > 0:
            raise ValueError(f"Operating width must be positive, got {self.operating_width}")
        contour = as_xy(self.contour)
        if np.hypot(*(contour[0] - contour[-1])) > 1e-9:
            contour = np.vstack([contour, contour[:1]])
        object.__setattr__(self, "contour", contour)
        if not self.headland.is_closed:
            raise ValueError("Headland must be a closed loop")
        if not self.contour_polygon.buffer(1e-6).contains(self.headland.to_linestring()):
            raise ValueError("Headland leaves the field contour")

    @property
    def contour_polygon(self) -> Polygon:
        return Polygon(self.contour)

    @property
    def headland_polygon(self) -> Polygon:
        return Polygon(self.headland.vertices)


def synthesize_headland(contour, w: float, distance: Optional[float] = None) -> PathPolyline:
    """Contour eroded by w/2 (or distance), re-started mid-way along its longest edge"""
    ring = inward_offset(contour, 0.5 * w if distance is None else distance)
    ring = roll_loop_start(ring, longest_edge_midpoint(ring))
    return PathPolyline.from_points(ring, role=PathRole.HEADLAND, drop_duplicates=True)


def longest_edge_heading(loop) -> float:
    """Direction of the longest edge; ties go to the edge closest to north-south"""
    xy = as_xy(loop)
    d = np.diff(xy, axis=0)
    lengths = np.hypot(d[:, 0], d[:, 1])
    headings = np.arctan2(d[:, 1], d[:, 0])
    candidates = np.nonzero(lengths >= lengths.max() - 1e-9)[0]
    off_vertical = np.abs(np.cos(headings[candidates]))
    return float(headings[candidates[int(np.argmin(off_vertical))]])


def generate_straight_lanes(headland_polygon, w: float, heading: Optional[float] = None) -> List[PathPolyline]:
    """
    floor(extent / w) parallel lanes at spacing w, centred across the
    headland interior and clipped to it, ordered across the field.
    """
    polygon = headland_polygon if isinstance(headland_polygon, Polygon) else Polygon(as_xy(headland_polygon))
    if heading is None:
        heading = longest_edge_heading(np.asarray(polygon.exterior.coords))
    d = np.array([math.cos(heading), math.sin(heading)])
    n = np.array([-d[1], d[0]])
    xy = np.asarray(polygon.exterior.coords)[:, :2]
    across = xy @ n
    along = xy @ d
    lo, hi = float(across.min()), float(across.max())
    count = int(math.floor((hi - lo) / w + 1e-9))
    if count == 0:
        return []
    first = lo + 0.5 * ((hi - lo) - (count - 1) * w)
    reach = float(along.max() - along.min()) + w
    centre_along = 0.5 * float(along.max() + along.min())

    lanes = []
    for k in range(count):
        offset = first + k * w
        base = offset * n + centre_along * d
        chord = LineString([base - reach * d, base + reach * d]).intersection(polygon)
        pieces = [g for g in getattr(chord, "geoms", [chord]) if g.geom_type == "LineString" and g.length > 0]
        if not pieces:
            continue
        piece = max(pieces, key=lambda g: g.length)
        coords = np.asarray(piece.coords)[:, :2]
        if float((coords[-1] - coords[0]) @ d) < 0:
            coords = coords[::-1]
        lanes.append(PathPolyline.from_points(coords[[0, -1]], role=PathRole.LANE))
    logger.info(f"Generated {len(lanes)} straight lanes at {w:.1f} m spacing")
    return lanes


class _Ring:
    """Closed loop with arclength parametrisation for connector extraction"""

    def __init__(self, loop: PathPolyline):
        self.xy = np.asarray(loop.vertices)
        self.line = LineString(self.xy)
        self.length = loop.length
        self.params = np.asarray(loop.cumulative_s)
        edges = np.diff(self.xy, axis=0)
        headings = np.arctan2(edges[:, 1], edges[:, 0])
        turns = np.abs(wrap_angle(np.roll(headings, -1) - headings))
        self.corner_params = self.params[1:][turns > RING_CORNER_TURN]

    def project(self, p) -> float:
        return float(self.line.project(Point(p)))

    def point(self, param: float) -> np.ndarray:
        return np.asarray(self.line.interpolate(param % self.length).coords[0][:2])

    def travel(self, start: float, distance: float, direction: int) -> np.ndarray:
        """Points along the loop from `start` for `distance` in direction +1 or -1"""
        points = [self.point(start)]
        vertex_params = self.params[:-1]
        unwrapped = np.concatenate([vertex_params + k * self.length for k in range(-2, 4)])
        if direction > 0:
            inside = unwrapped[(unwrapped > start + 1e-9) & (unwrapped < start + distance - 1e-9)]
            points += [self.point(p) for p in np.sort(inside)]
            points.append(self.point(start + distance))
        else:
            inside = unwrapped[(unwrapped < start - 1e-9) & (unwrapped > start - distance + 1e-9)]
            points += [self.point(p) for p in np.sort(inside)[::-1]]
            points.append(self.point(start - distance))
        return np.array(points)

    def gap(self, a: float, b: float, direction: int) -> float:
        return (b - a) % self.length if direction > 0 else (a - b) % self.length

    def corner_room(self, param: float, direction: int) -> float:
        """Distance to the nearest corner in a direction"""
        if not len(self.corner_params):
            return self.length
        return float(min(self.gap(param, c, direction) for c in self.corner_params))


def _append(points: List[np.ndarray], labels: List[PathRole], piece: np.ndarray, role: PathRole) -> None:
    """Join a piece; the shared junction keeps the role of the piece ending there"""
    if points:
        piece = piece[1:]
    points.extend(piece)
    labels.extend([role] * len(piece))


def _connector(ring: _Ring, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    pa, pb = ring.project(a), ring.project(b)
    forward, backward = ring.gap(pa, pb, 1), ring.gap(pa, pb, -1)
    if forward <= backward:
        return ring.travel(pa, forward, 1)
    return ring.travel(pa, backward, -1)


def assemble_coverage_plan(layout: FieldLayout, ds: float, turn_mode: str = "headland") -> PathPolyline:
    """
    Run-in of length w into the first lane, first lane, one full headland
    loop on to the adjacent end of the second lane, then the remaining lanes
    back and forth with the shorter headland connector (or straight
    connectors in direct mode), and a run-out of length w.
    """
    if turn_mode not in TURN_MODES:
        raise ValueError(f"Unknown turn mode {turn_mode!r}")
    if not layout.lanes:
        raise InputError("The field has no lanes to cover")
    ring = _Ring(layout.headland)
    w = layout.operating_width
    points: List[np.ndarray] = []
    labels: List[PathRole] = []

    first = np.asarray(layout.lanes[0].vertices)
    start_param = ring.project(first[0])
    # approach from the side with more room to the nearest corner
    approach = -1 if ring.corner_room(start_param, -1) < ring.corner_room(start_param, 1) else 1
    run_in = ring.travel(start_param - approach * w, w, approach)
    _append(points, labels, run_in, PathRole.HEADLAND)
    _append(points, labels, first, PathRole.LANE)

    previous_end = first[-1]
    for k, lane in enumerate(layout.lanes[1:], start=1):
        lane_xy = np.asarray(lane.vertices)
        if np.hypot(*(lane_xy[-1] - previous_end)) < np.hypot(*(lane_xy[0] - previous_end)):
            lane_xy = lane_xy[::-1]
        if k == 1:
            pa, pb = ring.project(previous_end), ring.project(lane_xy[0])
            forward, backward = ring.gap(pa, pb, 1), ring.gap(pa, pb, -1)
            direction = 1 if forward <= backward else -1
            loop = ring.travel(pa, ring.length + min(forward, backward), direction)
            _append(points, labels, loop, PathRole.HEADLAND)
        elif turn_mode == "direct":
            _append(points, labels, np.array([previous_end, lane_xy[0]]), PathRole.LANE)
        else:
            _append(points, labels, _connector(ring, previous_end, lane_xy[0]), PathRole.HEADLAND)
        _append(points, labels, lane_xy, PathRole.LANE)
        previous_end = lane_xy[-1]

    if len(layout.lanes) == 1:
        pa = ring.project(previous_end)
        _append(points, labels, ring.travel(pa, ring.length, 1), PathRole.HEADLAND)

    end_param = ring.project(previous_end)
    leave = 1 if ring.corner_room(end_param, 1) >= ring.corner_room(end_param, -1) else -1
    _append(points, labels, ring.travel(end_param, w, leave), PathRole.HEADLAND)

    kept_points, kept_labels = [points[0]], [labels[0]]
    for p, role in zip(points[1:], labels[1:]):
        if np.hypot(*(p - kept_points[-1])) > JUNCTION_MERGE_M:
            kept_points.append(p)
            kept_labels.append(role)
    plan = PathPolyline.from_points(np.array(kept_points), kept_labels)
    plan = resample_uniform(plan, ds, keep_vertices=True)
    logger.info(f"Assembled {turn_mode} coverage plan: {len(layout.lanes)} lanes, {plan.length:.1f} m")
    return plan


def build_layout(contour, w: float, headland: Optional[PathPolyline] = None,
                 lanes: Optional[Sequence[PathPolyline]] = None,
                 lane_heading: Optional[float] = None) -> FieldLayout:
    """Fill in a missing headland and missing lanes"""
    if headland is None:
        headland = synthesize_headland(contour, w)
    if lanes is None:
        lanes = generate_straight_lanes(Polygon(headland.vertices), w, lane_heading)
    return FieldLayout(as_xy(contour), headland, list(lanes), w)
