"""
Reference Generation

Detects edgy path segments (sharp corners and headland/lane junctions) and
builds the reference paths the smoother tracks:

- 5-point piecewise-affine corner references with a tip clearance rule
- Dubins transition references with straight extensions
- the weight index separating headland and lane parts of a transition
"""

import logging
import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import LineString, Point, Polygon

from config.config import SolverConfig
from .dubins import DubinsPath, Pose, shortest_dubins
from .errors import FallbackDubinsCorner, InfeasibleReference, InvalidPath
from .geometry import (
    PathPolyline, PathRole, ReferenceFrame, STATION_MERGE, as_xy, build_frame,
    corner_cut_smooth, distances_to_line, resample_uniform, wrap_angle,
)

logger = logging.getLogger(__name__)

PASSTHROUGH_TURN = math.radians(10.0)


class SegmentKind(Enum):
    HEADLAND_CORNER = "headland_corner"
    HEADLAND_TO_LANE = "headland_to_lane"
    LANE_TO_HEADLAND = "lane_to_headland"
    LANE_TO_LANE = "lane_to_lane"

    @property
    def is_transition(self) -> bool:
        return self is not SegmentKind.HEADLAND_CORNER


class SideConstraint(Enum):
    NONE = "none"
    UPPER = "upper"


@dataclass(frozen=True)
class EdgySegment:
    """Vertex range [i0, i1] of a path that needs smoothing"""

    path_id: str
    i0: int
    i1: int
    kind: SegmentKind
    apex_index: int

    def __post_init__(self):
        if not 0 <= self.i0 < self.i1:
            raise ValueError(f"Invalid segment range [{self.i0}, {self.i1}]")

    @property
    def segment_id(self) -> str:
        return f"{self.path_id}:{self.kind.value}:{self.i0}-{self.i1}"


@dataclass(frozen=True)
class ReferencePath:
    frame: ReferenceFrame
    kind: SegmentKind
    segment: EdgySegment
    entry: Pose
    exit: Pose
    side_constraint: SideConstraint = SideConstraint.NONE
    weight_index: Optional[int] = None
    e_y_ref: Optional[np.ndarray] = None
    interior_sign: int = 0
    tip_target: Optional[np.ndarray] = None
    tip_clearance: Optional[float] = None
    anchors: Optional[np.ndarray] = None
    dubins: Optional[DubinsPath] = None
    radius: Optional[float] = None
    extension: float = 0.0
    construction_time: float = 0.0

    def __post_init__(self):
        n = self.frame.n_samples
        ref = np.zeros(n) if self.e_y_ref is None else np.array(self.e_y_ref, dtype=float)
        if ref.shape != (n,):
            raise ValueError(f"e_y_ref must have {n} entries")
        ref.setflags(write=False)
        object.__setattr__(self, "e_y_ref", ref)
        if self.weight_index is not None and not 0 <= self.weight_index <= n - 1:
            raise ValueError(f"Weight index {self.weight_index} outside [0, {n - 1}]")

    @property
    def n_intervals(self) -> int:
        return self.frame.n_intervals


def default_extension_length(radius: float) -> float:
    """Straight extension before and after a Dubins core: 0.5 R clamped to [2, 5] m"""
    return float(min(max(0.5 * radius, 2.0), 5.0))


def _label_events(path: PathPolyline, turns: np.ndarray) -> List[int]:
    """Vertices at headland/lane label changes, placed on the sharper vertex of the pair"""
    abs_turn = np.zeros(path.n_vertices)
    abs_turn[1:-1] = np.abs(turns)
    events = []
    roles = {PathRole.HEADLAND, PathRole.LANE}
    for i in range(path.n_vertices - 1):
        a, b = path.labels[i], path.labels[i + 1]
        if a != b and a in roles and b in roles:
            events.append(i + 1 if abs_turn[i + 1] > abs_turn[i] else i)
    return events


def _outer_role(labels: Sequence[PathRole], start: int, step: int, fallback: PathRole) -> PathRole:
    i = start
    while 0 <= i < len(labels):
        if labels[i] is not PathRole.TRANSITION:
            return labels[i]
        i += step
    return fallback


def _classify(labels: Sequence[PathRole], i0: int, i1: int, pure_corner: bool) -> SegmentKind:
    before = _outer_role(labels, i0, -1, PathRole.HEADLAND)
    after = _outer_role(labels, i1, 1, before)
    if before is PathRole.HEADLAND and after is PathRole.HEADLAND:
        return SegmentKind.HEADLAND_CORNER if pure_corner else SegmentKind.LANE_TO_LANE
    if before is PathRole.HEADLAND:
        return SegmentKind.HEADLAND_TO_LANE
    if after is PathRole.HEADLAND:
        return SegmentKind.LANE_TO_HEADLAND
    return SegmentKind.LANE_TO_LANE


def _turn_aware_margin(turns: np.ndarray, members: List[int], radius: float, transition_margin: float) -> float:
    first = max(members[0], 1)
    last = min(members[-1], len(turns))
    phi = min(abs(float(np.sum(turns[first - 1:last]))), math.radians(SolverConfig.MARGIN_TURN_CAP_DEG))
    return radius * math.tan(phi / 2.0) + max(transition_margin - radius, 0.0)


def detect_edgy_segments(path: PathPolyline, theta: float, merge_distance: float,
                         corner_margin: float, transition_margin: float,
                         path_id: str = "plan", dubins_radius: Optional[float] = None) -> List[EdgySegment]:
    """
    Find vertices turning by more than theta and headland/lane label changes,
    cluster them when closer than merge_distance along the path and widen
    each cluster by a margin. Returns disjoint segments sorted by arclength.
    With dubins_radius R given, a transition margin is at least R tan(phi/2)
    plus its straight share (transition_margin - R), phi being the net turn
    of the cluster capped at SolverConfig.MARGIN_TURN_CAP_DEG.
    """
    if path.n_vertices < 3:
        return []
    turns = path.turn_angles()
    s = path.cumulative_s

    events = {int(k) + 1: "corner" for k in np.nonzero(np.abs(turns) > theta)[0]}
    for k in _label_events(path, turns):
        events[k] = "transition"
    if not events:
        return []

    clusters: List[List[int]] = []
    for k in sorted(events):
        if clusters and s[k] - s[clusters[-1][-1]] <= merge_distance:
            clusters[-1].append(k)
        else:
            clusters.append([k])

    abs_turn = np.zeros(path.n_vertices)
    abs_turn[1:-1] = np.abs(turns)
    ranges = []
    for members in clusters:
        pure_corner = all(events[k] == "corner" for k in members)
        margin = corner_margin if pure_corner else transition_margin
        if dubins_radius is not None and not pure_corner:
            margin = max(margin, _turn_aware_margin(turns, members, dubins_radius, transition_margin))
        i0 = int(np.searchsorted(s, s[members[0]] - margin - 1e-9, side="left"))
        i1 = int(np.searchsorted(s, s[members[-1]] + margin + 1e-9, side="right") - 1)
        i0 = min(max(i0, 0), members[0] - 1) if members[0] > 0 else 0
        i1 = max(min(i1, path.n_vertices - 1), min(members[-1] + 1, path.n_vertices - 1))
        apex = max(members, key=lambda k: abs_turn[k])
        ranges.append([i0, i1, members, pure_corner, apex])

    merged = [ranges[0]]
    for current in ranges[1:]:
        previous = merged[-1]
        if current[0] <= previous[1]:
            middle = (previous[1] + current[0]) // 2
            if previous[2][-1] < middle and current[2][0] > middle + 1:
                previous[1] = middle
                current[0] = middle + 1
            else:
                members = previous[2] + current[2]
                previous[1] = current[1]
                previous[2] = members
                previous[3] = previous[3] and current[3]
                previous[4] = max(members, key=lambda k: abs_turn[k])
                continue
        merged.append(current)

    segments = []
    for i0, i1, members, pure_corner, apex in merged:
        if i1 <= i0:
            continue
        kind = _classify(path.labels, i0, i1, pure_corner)
        segments.append(EdgySegment(path_id, i0, i1, kind, int(apex)))
    logger.info(f"Detected {len(segments)} edgy segments on {path_id} "
                f"({sum(1 for seg in segments if not seg.kind.is_transition)} corners)")
    return segments


def uniform_stations(total: float, spacing: float) -> np.ndarray:
    """Multiples of spacing plus the end; at least three stations"""
    merge = STATION_MERGE * spacing
    stations = np.arange(0, int(math.floor(total / spacing)) + 1) * spacing
    stations = np.append(stations[stations < total - merge], total)
    if len(stations) < 3:
        stations = np.linspace(0.0, total, 3)
    return stations


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.hypot(v[0], v[1]))
    if norm <= 0.0:
        raise InvalidPath("Zero-length direction")
    return v / norm


def _line_intersection(p: np.ndarray, d: np.ndarray, q: np.ndarray, e: np.ndarray) -> Optional[np.ndarray]:
    det = d[0] * (-e[1]) - d[1] * (-e[0])
    if abs(det) < 1e-12:
        return None
    r = q - p
    t = (r[0] * (-e[1]) - r[1] * (-e[0])) / det
    return p + t * d


def _contour_polygon(contour) -> Polygon:
    return contour if isinstance(contour, Polygon) else Polygon(as_xy(contour))


def _first_ray_hit(origin: np.ndarray, direction: np.ndarray, polygon: Polygon) -> Optional[np.ndarray]:
    reach = 10.0 * math.sqrt(max(polygon.area, 1.0)) + polygon.exterior.length
    ray = LineString([origin, origin + reach * direction])
    hit = ray.intersection(polygon.exterior)
    if hit.is_empty:
        return None
    points = [np.asarray(g.coords[0][:2]) for g in getattr(hit, "geoms", [hit])]
    return min(points, key=lambda q: float(np.hypot(*(q - origin))))


def interior_side(apex: np.ndarray, mean_direction: np.ndarray, contour) -> int:
    """+1 when the field interior lies left of the mean travel direction, else -1"""
    polygon = _contour_polygon(contour)
    normal = np.array([-mean_direction[1], mean_direction[0]])

    def depth(p):
        point = Point(p)
        distance = polygon.exterior.distance(point)
        return distance if polygon.contains(point) else -distance

    return 1 if depth(apex + normal) >= depth(apex - normal) else -1


def tip_reference_offsets(frame: ReferenceFrame, tip_target, clearance: float, interior_sign: int) -> np.ndarray:
    """
    Lateral reference profile pushing the sample nearest the tip target
    outward until it lies within clearance of the target.
    """
    e_y_ref = np.zeros(frame.n_samples)
    if tip_target is None:
        return e_y_ref
    target = np.asarray(tip_target, dtype=float)
    distances = np.hypot(*(frame.xy - target).T)
    j = int(np.argmin(distances))
    excess = max(0.0, float(distances[j]) - clearance)
    e_y_ref[j] = -interior_sign * excess
    return e_y_ref


def build_pwa5_reference(segment: EdgySegment, path: PathPolyline, contour, w: float,
                         ds: float, corner_cut_iterations: int = 2) -> ReferencePath:
    """
    Five-point corner reference A, B, T, D, E.

    A and E are the segment boundary vertices. The tip T lies on the outward
    bisector at w/2 from the bisector's contour hit Q, so the swath edge
    reaches the contour. B and D are the midpoints of A-T and T-E.
    """
    started = time.perf_counter()
    v = path.vertices
    A, E = np.array(v[segment.i0]), np.array(v[segment.i1])
    d_in = _unit(v[segment.i0 + 1] - v[segment.i0])
    d_out = _unit(v[segment.i1] - v[segment.i1 - 1])
    turn = float(wrap_angle(math.atan2(d_out[1], d_out[0]) - math.atan2(d_in[1], d_in[0])))
    entry = Pose(float(A[0]), float(A[1]), math.atan2(d_in[1], d_in[0]))
    exit_pose = Pose(float(E[0]), float(E[1]), math.atan2(d_out[1], d_out[0]))

    if abs(turn) < PASSTHROUGH_TURN:
        original = PathPolyline.from_points(v[segment.i0:segment.i1 + 1], role=PathRole.HEADLAND)
        frame = build_frame(resample_uniform(original, ds, keep_vertices=False))
        logger.debug(f"Corner {segment.segment_id} turns {math.degrees(turn):.1f} deg; passthrough")
        return ReferencePath(frame=frame, kind=segment.kind, segment=segment, entry=entry, exit=exit_pose,
                             construction_time=time.perf_counter() - started)

    polygon = _contour_polygon(contour)
    apex = _line_intersection(A, d_in, E, -d_out)
    if apex is None:
        raise FallbackDubinsCorner(f"Corner {segment.segment_id}: edges are parallel")
    sign = interior_side(apex, _unit(d_in + d_out), polygon)
    if (1 if turn > 0 else -1) != sign:
        raise FallbackDubinsCorner(f"Corner {segment.segment_id} is reflex with respect to the field")

    outward = _unit(d_in - d_out)
    hit = _first_ray_hit(apex, outward, polygon)
    if hit is None:
        raise FallbackDubinsCorner(f"Corner {segment.segment_id}: bisector misses the contour")
    tip = hit - 0.5 * w * outward
    if float(np.dot(tip - apex, outward)) < 0.0:
        tip = apex
    anchors = np.array([A, 0.5 * (A + tip), tip, 0.5 * (tip + E), E])

    pwa = PathPolyline.from_points(anchors, role=PathRole.HEADLAND, drop_duplicates=True)
    dense = resample_uniform(pwa, ds, keep_vertices=False)
    cut = corner_cut_smooth(dense, corner_cut_iterations)
    reference = resample_uniform(cut, ds, keep_vertices=False)
    frame = build_frame(reference)

    clearance = 0.5 * w - SolverConfig.TIP_CLEARANCE_MARGIN_M
    e_y_ref = tip_reference_offsets(frame, hit, clearance, sign)
    return ReferencePath(
        frame=frame, kind=segment.kind, segment=segment, entry=entry, exit=exit_pose,
        side_constraint=SideConstraint.UPPER, e_y_ref=e_y_ref, interior_sign=sign,
        tip_target=hit, tip_clearance=clearance, anchors=anchors,
        construction_time=time.perf_counter() - started,
    )


def _edgy_span(path: PathPolyline, segment: EdgySegment, theta: float = math.radians(1.0)) -> Tuple[float, float]:
    """Arclength of the first and last turning vertex inside the segment"""
    s = path.cumulative_s
    turns = np.abs(path.turn_angles())
    inner = [k for k in range(segment.i0 + 1, segment.i1) if turns[k - 1] > theta]
    if not inner:
        return float(s[segment.apex_index]), float(s[segment.apex_index])
    return float(s[inner[0]]), float(s[inner[-1]])


def transition_extension(segment: EdgySegment, path: PathPolyline, radius: float, l_ext: float) -> float:
    """
    Extension length, shortened when the segment range leaves less straight
    room than the Dubins tangent length R tan(phi/2) needs.
    """
    v = path.vertices
    s = path.cumulative_s
    d_in = _unit(v[segment.i0 + 1] - v[segment.i0])
    d_out = _unit(v[segment.i1] - v[segment.i1 - 1])
    phi = abs(float(wrap_angle(math.atan2(d_out[1], d_out[0]) - math.atan2(d_in[1], d_in[0]))))
    first, last = _edgy_span(path, segment)
    room = min(first - s[segment.i0], s[segment.i1] - last)
    tangent = radius * math.tan(min(phi, math.radians(179.0)) / 2.0)
    if room - tangent < SolverConfig.MIN_EXTENSION_M:
        logger.warning(f"{segment.segment_id}: {room:.2f} m of straight room for a {tangent:.2f} m tangent "
                       f"at R={radius:.2f} m; extension floored at {SolverConfig.MIN_EXTENSION_M} m")
    return float(max(min(l_ext, room - tangent), SolverConfig.MIN_EXTENSION_M))


def _is_loop(dubins: DubinsPath, phi: float) -> bool:
    """Arcs turning more than a quarter revolution beyond the net turn (loops and wrong-way turns)"""
    return dubins.total_turn > phi + 0.5 * math.pi


def build_dubins_reference(segment: EdgySegment, path: PathPolyline, radius: float, l_ext: float,
                           ds: float, headland=None, weight_radius: float = 1.0) -> ReferencePath:
    """
    Straight extension from the entry vertex, shortest Dubins path, straight
    extension into the exit vertex; sampled at ds with exact arclength.
    """
    started = time.perf_counter()
    v = path.vertices
    start, end = np.array(v[segment.i0]), np.array(v[segment.i1])
    d_in = _unit(v[segment.i0 + 1] - v[segment.i0])
    d_out = _unit(v[segment.i1] - v[segment.i1 - 1])
    psi_in = math.atan2(d_in[1], d_in[0])
    psi_out = math.atan2(d_out[1], d_out[0])

    phi = abs(float(wrap_angle(psi_out - psi_in)))
    ext = transition_extension(segment, path, radius, l_ext)
    dubins = shortest_dubins(Pose(*(start + ext * d_in), psi_in), Pose(*(end - ext * d_out), psi_out), radius)
    if _is_loop(dubins, phi):
        # all of the straight room goes to the Dubins core
        logger.warning(f"{segment.segment_id}: {dubins.word.value} loops at R={radius:.2f} m; dropping the extensions")
        ext = 0.0
        dubins = shortest_dubins(Pose(*start, psi_in), Pose(*end, psi_out), radius)
    if _is_loop(dubins, phi):
        raise InfeasibleReference(
            f"{segment.segment_id}: no loop-free Dubins word between the segment ends at R={radius:.2f} m "
            f"({dubins.word.value} turns {math.degrees(dubins.total_turn):.0f} deg "
            f"for a {math.degrees(phi):.0f} deg turn)")
    core_end = end - ext * d_out
    core_length = dubins.length
    total = core_length + 2.0 * ext
    core_end_psi = dubins.pose_at(core_length).psi

    stations = uniform_stations(total, ds)
    xy = np.empty((len(stations), 2))
    psi = np.empty(len(stations))
    kappa = np.zeros(len(stations))
    for k, st in enumerate(stations):
        if st <= ext:
            xy[k] = start + st * d_in
            psi[k] = psi_in
        elif st < ext + core_length:
            pose = dubins.pose_at(st - ext)
            xy[k] = pose.x, pose.y
            psi[k] = pose.psi
            kappa[k] = dubins.curvature_at(st - ext)
        else:
            xy[k] = core_end + (st - ext - core_length) * d_out
            psi[k] = core_end_psi
    xy[-1] = end

    frame = ReferenceFrame(s=stations, xy=xy, psi=psi, kappa=kappa)
    reference = ReferencePath(
        frame=frame, kind=segment.kind, segment=segment,
        entry=Pose(float(start[0]), float(start[1]), psi_in),
        exit=Pose(float(end[0]), float(end[1]), psi_out),
        dubins=dubins, radius=radius, extension=ext,
        construction_time=time.perf_counter() - started,
    )
    if headland is not None:
        index = compute_weight_index(reference, headland, weight_radius)
        reference = _with_weight_index(reference, index)
    return reference


def _with_weight_index(reference: ReferencePath, index: Optional[int]) -> ReferencePath:
    return replace(reference, weight_index=index)


def compute_weight_index(reference: ReferencePath, headland, radius: float = 1.0) -> Optional[int]:
    """
    Headland-to-lane: last sample within radius of the headland (0 if none).
    Lane-to-headland: first such sample (N if none). Other kinds: None.
    """
    if reference.kind not in (SegmentKind.HEADLAND_TO_LANE, SegmentKind.LANE_TO_HEADLAND):
        return None
    distances = distances_to_line(reference.frame.xy, as_xy(headland))
    near = np.nonzero(distances <= radius)[0]
    n = reference.frame.n_samples - 1
    if reference.kind is SegmentKind.HEADLAND_TO_LANE:
        return int(near[-1]) if near.size else 0
    return int(near[0]) if near.size else n
