"""
Path Smoother

Builds and solves the corner LP (one-sided tip constraint with a slack)
and the transition LP (weighted two-sided deviation) over the condensed
linear spatial dynamics, reconstructs smoothed paths and splices them
back into the plan.
"""

import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.config import Config, RunConfig, SolverConfig
from .errors import (
    FallbackDubinsCorner, InfeasibleReference, ModelSingularity, SmoothingFailed, StitchMismatch,
)
from .geometry import (
    PathPolyline, PathRole, ReferenceFrame, build_frame, frame_to_global_array,
    resample_uniform, three_point_curvature, wrap_angle,
)
from .lp_core import LinearProgram, LpSolution, dump_lp, solve
from .reference_gen import (
    EdgySegment, ReferencePath, SegmentKind, SideConstraint, build_dubins_reference,
    build_pwa5_reference, tip_reference_offsets,
)
from .vehicle_dynamics import (
    LtvSpatialSystem, SpatialState, VehicleParams, count_rate_violations,
    linearize_and_discretize, rollout_spatial, state_dependent_rate_bounds,
)

logger = logging.getLogger(__name__)

STITCH_TOLERANCE_M = 0.5


@dataclass(frozen=True)
class SmoothingProblem:
    reference: ReferencePath
    system: LtvSpatialSystem
    params: VehicleParams
    z0: SpatialState = SpatialState()
    e_y_ref: Optional[np.ndarray] = None
    delta_start: Optional[float] = None
    delta_end: Optional[float] = None

    def __post_init__(self):
        n = self.system.n_intervals
        if self.reference.frame.n_intervals != n:
            raise ValueError("Reference frame and system sample counts differ")
        ref = self.reference.e_y_ref if self.e_y_ref is None else np.asarray(self.e_y_ref, dtype=float)
        if ref.shape != (n + 1,):
            raise ValueError(f"e_y_ref must have {n + 1} entries")
        object.__setattr__(self, "e_y_ref", np.array(ref))
        kappa = self.reference.frame.kappa[0]
        if self.z0.e_y * kappa >= 1.0:
            raise ValueError("Initial lateral deviation beyond the curvature centre")

    @property
    def kind(self) -> SegmentKind:
        return self.reference.kind

    @property
    def n_intervals(self) -> int:
        return self.system.n_intervals


@dataclass
class SmoothingDiagnostics:
    n_u: int = 0
    n_cstrts: int = 0
    N: int = 0
    solve_time: float = 0.0
    total_solve_time: float = 0.0
    max_abs_e_y: float = 0.0
    traveled_length: float = 0.0
    lp_status: str = ""
    slack: Optional[float] = None
    rollout_max_deviation: float = float("nan")
    state_dependent_rate_violations: int = 0
    max_second_difference: float = 0.0
    refinements: int = 0


@dataclass(frozen=True)
class SmoothedPath:
    polyline: PathPolyline
    steering: np.ndarray
    e_y: np.ndarray
    e_psi: np.ndarray
    frame: ReferenceFrame
    kind: SegmentKind
    segment_id: str = ""
    diagnostics: SmoothingDiagnostics = field(default_factory=SmoothingDiagnostics)


def make_problem(reference: ReferencePath, params: VehicleParams, z0: Optional[SpatialState] = None,
                 clip_nominal: Optional[bool] = None, delta_start: Optional[float] = None,
                 delta_end: Optional[float] = None) -> SmoothingProblem:
    """Linearise along the reference and wrap everything the LP builders need"""
    if clip_nominal is None:
        clip_nominal = reference.side_constraint is SideConstraint.UPPER
    system = linearize_and_discretize(reference.frame, params, clip_nominal=clip_nominal)
    return SmoothingProblem(reference, system, params, z0 or SpatialState(), None, delta_start, delta_end)


def _steering_bounds(p: SmoothingProblem) -> Tuple[np.ndarray, np.ndarray]:
    n = p.n_intervals
    lower = np.full(n, p.params.delta_min)
    upper = np.full(n, p.params.delta_max)
    for index, value in ((0, p.delta_start), (n - 1, p.delta_end)):
        if value is not None:
            pinned = float(np.clip(value, p.params.delta_min, p.params.delta_max))
            lower[index] = upper[index] = pinned
    return lower, upper


def _rate_rows(p: SmoothingProblem, first_row: int):
    """Steering-change rows for consecutive intervals: 2 (N - 1) rows"""
    n = p.n_intervals
    lo, hi = p.params.rate_step_bounds(p.system.spacing[:-1])
    rows, cols, vals, rhs = [], [], [], []
    row = first_row
    for j in range(n - 1):
        rows += [row, row, row + 1, row + 1]
        cols += [j + 1, j, j + 1, j]
        vals += [1.0, -1.0, -1.0, 1.0]
        rhs += [hi[j], -lo[j]]
        row += 2
    return rows, cols, vals, rhs


def _lateral_rows(M_y: np.ndarray, j: int, sign: float):
    cols = np.nonzero(M_y[j])[0]
    return cols, sign * M_y[j][cols]


def _condensed_lateral(p: SmoothingProblem) -> Tuple[np.ndarray, np.ndarray]:
    M, c = p.system.condense(p.z0)
    return M[:, 1, :], c[:, 1]


def build_lp_problem1(p: SmoothingProblem) -> LinearProgram:
    """
    Variables [delta_0..delta_{N-1}, t_1..t_N, sigma]; minimise sum(t) + w_s sigma.
    Per sample: t_j >= s (ref_j - e_y,j) and s (e_y,j - ref_j) <= sigma, with s
    the field-interior side; plus steering-change rows.
    """
    n = p.n_intervals
    M_y, c_y = _condensed_lateral(p)
    ref = p.e_y_ref
    s = float(p.reference.interior_sign or 1)
    sigma = 2 * n

    rows, cols, vals, rhs = [], [], [], []
    row = 0
    for j in range(1, n + 1):
        t = n + j - 1
        idx, coef = _lateral_rows(M_y, j, -s)
        rows += [row] * (len(idx) + 1)
        cols += list(idx) + [t]
        vals += list(coef) + [-1.0]
        rhs.append(s * (c_y[j] - ref[j]))
        row += 1

        idx, coef = _lateral_rows(M_y, j, s)
        rows += [row] * (len(idx) + 1)
        cols += list(idx) + [sigma]
        vals += list(coef) + [-1.0]
        rhs.append(s * (ref[j] - c_y[j]))
        row += 1

    r_rows, r_cols, r_vals, r_rhs = _rate_rows(p, row)
    lower, upper = _steering_bounds(p)
    cost = np.concatenate([np.zeros(n), np.ones(n), [SolverConfig.SLACK_WEIGHT]])
    return LinearProgram(
        c=cost,
        rows=rows + r_rows, cols=cols + r_cols, vals=vals + r_vals, h=rhs + r_rhs,
        lower=np.concatenate([lower, np.zeros(n + 1)]),
        upper=np.concatenate([upper, np.full(n + 1, np.inf)]),
        name=f"{p.reference.segment.segment_id}:problem1",
    )


def transition_weights(kind: SegmentKind, n: int, weight_index: Optional[int],
                       weight: float = SolverConfig.TRANSITION_WEIGHT) -> np.ndarray:
    """Cost weights for t_1..t_N: heavy on the headland part of a transition"""
    j = np.arange(1, n + 1)
    if weight_index is None:
        return np.ones(n)
    if kind is SegmentKind.HEADLAND_TO_LANE:
        return np.where(j <= weight_index, weight, 1.0)
    if kind is SegmentKind.LANE_TO_HEADLAND:
        return np.where(j >= weight_index, weight, 1.0)
    return np.ones(n)


def build_lp_problem2(p: SmoothingProblem) -> LinearProgram:
    """
    Variables [delta_0..delta_{N-1}, t_1..t_N]; minimise sum(c_j t_j) with
    t_j >= |e_y,j - ref_j|; plus steering-change rows.
    """
    n = p.n_intervals
    M_y, c_y = _condensed_lateral(p)
    ref = p.e_y_ref

    rows, cols, vals, rhs = [], [], [], []
    row = 0
    for j in range(1, n + 1):
        t = n + j - 1
        for sign in (1.0, -1.0):
            idx, coef = _lateral_rows(M_y, j, sign)
            rows += [row] * (len(idx) + 1)
            cols += list(idx) + [t]
            vals += list(coef) + [-1.0]
            rhs.append(sign * (ref[j] - c_y[j]))
            row += 1

    r_rows, r_cols, r_vals, r_rhs = _rate_rows(p, row)
    lower, upper = _steering_bounds(p)
    weights = transition_weights(p.kind, n, p.reference.weight_index)
    return LinearProgram(
        c=np.concatenate([np.zeros(n), weights]),
        rows=rows + r_rows, cols=cols + r_cols, vals=vals + r_vals, h=rhs + r_rhs,
        lower=np.concatenate([lower, np.zeros(n)]),
        upper=np.concatenate([upper, np.full(n, np.inf)]),
        name=f"{p.reference.segment.segment_id}:problem2",
    )


def _dump(lp: LinearProgram, dump_dir: Optional[str], suffix: str) -> None:
    directory = dump_dir or Config.LP_DUMP_DIR
    if directory:
        safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", lp.name or "lp")
        dump_lp(lp, Path(directory) / f"{safe}_{suffix}.lp")


def _solve_checked(lp: LinearProgram, segment_id: str, dump_dir: Optional[str], suffix: str) -> LpSolution:
    _dump(lp, dump_dir, suffix)
    solution = solve(lp)
    if not solution.is_optimal:
        raise SmoothingFailed(f"LP for {segment_id} is {solution.status.value}",
                              segment_id=segment_id, status=solution.status.value)
    return solution


def _refined_problem(p: SmoothingProblem, frame: ReferenceFrame, states: np.ndarray, ds: float) -> SmoothingProblem:
    """Frame on the previous solution, re-linearised, with the tip rule re-applied"""
    s = frame.s
    xy, _ = frame_to_global_array(frame, s, states[:, 1], states[:, 0])
    solution = PathPolyline.from_points(xy, role=PathRole.HEADLAND, drop_duplicates=True)
    new_frame = build_frame(resample_uniform(solution, ds, keep_vertices=False))
    reference = p.reference
    e_y_ref = tip_reference_offsets(new_frame, reference.tip_target, reference.tip_clearance or 0.0,
                                    reference.interior_sign)
    reference = replace(reference, frame=new_frame, e_y_ref=e_y_ref)
    system = linearize_and_discretize(new_frame, p.params, clip_nominal=True)
    z0 = SpatialState(float(wrap_angle(reference.entry.psi - new_frame.psi[0])), 0.0)
    return SmoothingProblem(reference, system, p.params, z0, e_y_ref, p.delta_start, p.delta_end)


def _reference_spacing(frame: ReferenceFrame) -> float:
    return float(np.max(frame.spacing))


def solve_smoothing(p: SmoothingProblem, refinements: int = 1, dump_dir: Optional[str] = None) -> SmoothedPath:
    """
    Corner problems: solve, rebuild the frame on the solution and re-solve
    `refinements` times. Transition problems: one solve.
    """
    segment_id = p.reference.segment.segment_id
    corner = p.reference.side_constraint is SideConstraint.UPPER
    builder = build_lp_problem1 if corner else build_lp_problem2
    ds = _reference_spacing(p.reference.frame)

    lp = builder(p)
    solution = _solve_checked(lp, segment_id, dump_dir, "pass0")
    total_time = solution.solve_time
    n = p.n_intervals
    steering = np.clip(solution.x[:n], p.params.delta_min, p.params.delta_max)
    states = p.system.propagate(p.z0, steering)
    first_pass_max = float(np.max(np.abs(states[:, 1])))

    done = 0
    if corner:
        for k in range(refinements):
            p = _refined_problem(p, p.reference.frame, states, ds)
            lp = builder(p)
            solution = _solve_checked(lp, segment_id, dump_dir, f"pass{k + 1}")
            total_time += solution.solve_time
            n = p.n_intervals
            steering = np.clip(solution.x[:n], p.params.delta_min, p.params.delta_max)
            states = p.system.propagate(p.z0, steering)
            done += 1

    frame = p.reference.frame
    xy, _ = frame_to_global_array(frame, frame.s, states[:, 1], states[:, 0])
    role = PathRole.HEADLAND if p.kind is SegmentKind.HEADLAND_CORNER else PathRole.TRANSITION
    polyline = PathPolyline.from_points(xy, role=role, drop_duplicates=True)

    try:
        nonlinear = rollout_spatial(frame, p.z0, steering, p.params)
        rollout_deviation = float(np.max(np.abs(nonlinear[:, 1] - states[:, 1])))
    except ModelSingularity as e:
        logger.warning(f"Rollout cross-check for {segment_id} hit a singularity: {e}")
        rollout_deviation = float("nan")

    lower, upper = state_dependent_rate_bounds(frame, states, p.params)
    second = np.abs(np.diff(states[:, 1], n=2)) if len(states) > 2 else np.zeros(1)
    diagnostics = SmoothingDiagnostics(
        n_u=lp.n_variables,
        n_cstrts=lp.n_constraints,
        N=n,
        solve_time=solution.solve_time,
        total_solve_time=total_time,
        max_abs_e_y=first_pass_max if corner else float(np.max(np.abs(states[:, 1]))),
        traveled_length=polyline.length,
        lp_status=solution.status.value,
        slack=float(solution.x[2 * n]) if corner else None,
        rollout_max_deviation=rollout_deviation,
        state_dependent_rate_violations=count_rate_violations(steering, lower, upper),
        max_second_difference=float(np.max(second)),
        refinements=done,
    )
    logger.debug(f"Smoothed {segment_id}: N={n}, n_u={lp.n_variables}, rows={lp.n_constraints}, "
                 f"max|e_y|={diagnostics.max_abs_e_y:.3f} m")
    return SmoothedPath(polyline, steering, states[:, 1].copy(), states[:, 0].copy(), frame,
                        p.kind, segment_id, diagnostics)


@dataclass(frozen=True)
class FeasibilityReport:
    box_violations: int
    rate_violations: int

    @property
    def ok(self) -> bool:
        return self.box_violations == 0 and self.rate_violations == 0


def check_feasibility(smoothed: SmoothedPath, params: VehicleParams, tol: float = 1e-9) -> FeasibilityReport:
    """Steering box and state-independent rate limits over all intervals"""
    steering = smoothed.steering
    box = int(np.sum((steering > params.delta_max + tol) | (steering < params.delta_min - tol)))
    lower, upper = params.rate_step_bounds(smoothed.frame.spacing)
    return FeasibilityReport(box, count_rate_violations(steering, lower, upper, tol))


def stitch_replace(path: PathPolyline, segment: EdgySegment, smoothed: Union[SmoothedPath, PathPolyline],
                   theta: Optional[float] = None) -> PathPolyline:
    """
    Replace vertices i0..i1 with the smoothed polyline. A SmoothedPath
    relabels the interior: TRANSITION for transitions, HEADLAND for corners.
    """
    if isinstance(smoothed, SmoothedPath):
        piece = smoothed.polyline
        role = PathRole.HEADLAND if smoothed.kind is SegmentKind.HEADLAND_CORNER else PathRole.TRANSITION
        labels = [role] * piece.n_vertices
    else:
        piece = smoothed
        labels = list(piece.labels)

    v = path.vertices
    start_gap = float(np.hypot(*(piece.vertices[0] - v[segment.i0])))
    end_gap = float(np.hypot(*(piece.vertices[-1] - v[segment.i1])))
    if start_gap > STITCH_TOLERANCE_M or end_gap > STITCH_TOLERANCE_M:
        raise StitchMismatch(f"Segment {segment.segment_id} misses the path by "
                             f"{start_gap:.3f} m / {end_gap:.3f} m")

    vertices = np.array(piece.vertices)
    vertices[0] = v[segment.i0]
    vertices[-1] = v[segment.i1]
    if isinstance(smoothed, SmoothedPath):
        labels[0] = path.labels[segment.i0]
        labels[-1] = path.labels[segment.i1]

    joined = np.vstack([v[:segment.i0], vertices, v[segment.i1 + 1:]])
    joined_labels = list(path.labels[:segment.i0]) + labels + list(path.labels[segment.i1 + 1:])
    result = PathPolyline.from_points(joined, joined_labels)

    if theta is not None and result.n_vertices > 2:
        turns = np.abs(result.turn_angles())
        for junction in (segment.i0, segment.i0 + piece.n_vertices - 1):
            if 1 <= junction <= result.n_vertices - 2 and turns[junction - 1] > theta:
                logger.warning(f"Junction heading change {math.degrees(turns[junction - 1]):.1f} deg "
                               f"after stitching {segment.segment_id}")
    return result


def stitch_all(path: PathPolyline, replacements: Sequence[Tuple[EdgySegment, Union[SmoothedPath, PathPolyline]]],
               theta: Optional[float] = None, failures: Optional[Dict[str, str]] = None) -> PathPolyline:
    """
    Apply disjoint replacements from the back so earlier indices stay valid.
    With a failures dict, a replacement that misses the path is recorded
    there by segment id and the original vertices are kept.
    """
    for segment, smoothed in sorted(replacements, key=lambda item: item[0].i0, reverse=True):
        try:
            path = stitch_replace(path, segment, smoothed, theta)
        except StitchMismatch as e:
            if failures is None:
                raise
            logger.error(f"{e}; keeping the original vertices")
            failures[segment.segment_id] = str(e)
    return path


def pinned_steering(path: PathPolyline, index: int, params: VehicleParams) -> float:
    """Steering implied by the path curvature at a vertex"""
    kappa = three_point_curvature(np.asarray(path.vertices))[index]
    return float(np.clip(math.atan(params.wheelbase * kappa), params.delta_min, params.delta_max))


@dataclass(frozen=True)
class InstanceResult:
    segment: EdgySegment
    reference: ReferencePath
    smoothed: SmoothedPath
    radius: Optional[float] = None
    retried: bool = False
    fallback_corner: bool = False


def build_reference(segment: EdgySegment, path: PathPolyline, cfg: RunConfig, contour, headland,
                    radius: Optional[float] = None) -> Tuple[ReferencePath, bool]:
    """Corner references fall back to a Dubins reference when the 5-point construction fails"""
    radius = cfg.r_dubins if radius is None else radius
    if segment.kind is SegmentKind.HEADLAND_CORNER:
        try:
            return build_pwa5_reference(segment, path, contour, cfg.operating_width_m, cfg.ds_m,
                                        cfg.corner_cut_iterations), False
        except FallbackDubinsCorner as e:
            logger.warning(f"{e}; using a Dubins reference")
            return build_dubins_reference(segment, path, radius, cfg.l_ext, cfg.ds_m), True
    return build_dubins_reference(segment, path, radius, cfg.l_ext, cfg.ds_m, headland,
                                  cfg.weight_index_radius_m), False


def smooth_instance(segment: EdgySegment, path: PathPolyline, cfg: RunConfig, contour, headland,
                    dump_dir: Optional[str] = None) -> InstanceResult:
    """
    Build the reference and solve. A Dubins-based instance that fails is
    retried once with the radius enlarged by SolverConfig.RETRY_RADIUS_FACTOR.
    """
    params = cfg.vehicle_params()
    radius = cfg.r_dubins
    retried = False
    while True:
        reference, fallback = build_reference(segment, path, cfg, contour, headland, radius)
        try:
            problem = make_problem(
                reference, params,
                delta_start=pinned_steering(path, segment.i0, params) if cfg.pin_start_steering else None,
                delta_end=pinned_steering(path, segment.i1, params) if cfg.pin_end_steering else None,
            )
            smoothed = solve_smoothing(problem, cfg.lp_refinements, dump_dir)
            return InstanceResult(segment, reference, smoothed, reference.radius, retried, fallback)
        except (SmoothingFailed, InfeasibleReference) as e:
            if reference.dubins is None or retried:
                if isinstance(e, SmoothingFailed):
                    raise
                raise SmoothingFailed(str(e), segment_id=segment.segment_id, status="infeasible_reference") from e
            radius *= SolverConfig.RETRY_RADIUS_FACTOR
            retried = True
            logger.warning(f"Retrying {segment.segment_id} with R_Dubins={radius:.2f} m: {e}")
