"""
Parameter studies: Dubins radius sweep, grid spacing sweep and the
saturated-steering turn for both initial steering angles.
"""

import csv
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from config.config import RunConfig
from .field_plan import FieldLayout, assemble_coverage_plan
from .orchestrator import InstanceOrchestrator, prepare_tasks
from .smoother import InstanceResult
from .vehicle_dynamics import SaturationResult, VehicleParams, saturated_steering_simulation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadiusSweepRow:
    radius: float
    instances: int
    failed: int
    mean_max_abs_e_y: float
    max_max_abs_e_y: float
    mean_n_u: float
    mean_n_cstrts: float


@dataclass(frozen=True)
class SpacingSweepRow:
    ds: float
    instances: int
    failed: int
    mean_n_u: float
    mean_n_cstrts: float
    mean_max_abs_e_y: float
    max_max_abs_e_y: float
    max_second_difference: float


def _solve_transitions(layout: FieldLayout, cfg: RunConfig, plan=None):
    plan, segments, tasks = prepare_tasks(layout, cfg, plan=plan)
    tasks = [t for t in tasks if t.segment.kind.is_transition]
    outcomes = InstanceOrchestrator(cfg.max_workers).smooth_all(tasks)
    solved = [o for o in outcomes if isinstance(o, InstanceResult)]
    return plan, solved, len(outcomes) - len(solved)


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else float("nan")


def _max(values: Sequence[float]) -> float:
    return float(np.max(values)) if len(values) else float("nan")


def sweep_radius(layout: FieldLayout, cfg: RunConfig, radii: Iterable[float]) -> List[RadiusSweepRow]:
    """
    Re-solve every transition of the field for each Dubins radius. The plan
    is assembled once; segments and their margins are detected again for
    each radius so the Dubins tangents fit inside the segment ranges.
    """
    plan = assemble_coverage_plan(layout, cfg.ds_m, cfg.turn_mode)
    rows = []
    for radius in radii:
        run_cfg = cfg.with_overrides(r_dubins_m=float(radius), compute_coverage=False)
        _, solved, failed = _solve_transitions(layout, run_cfg, plan=plan)
        deviations = [r.smoothed.diagnostics.max_abs_e_y for r in solved]
        rows.append(RadiusSweepRow(
            radius=float(radius),
            instances=len(solved),
            failed=failed,
            mean_max_abs_e_y=_mean(deviations),
            max_max_abs_e_y=_max(deviations),
            mean_n_u=_mean([r.smoothed.diagnostics.n_u for r in solved]),
            mean_n_cstrts=_mean([r.smoothed.diagnostics.n_cstrts for r in solved]),
        ))
        logger.info(f"R_Dubins={radius:.2f} m: mean max|e_y|={rows[-1].mean_max_abs_e_y:.3f} m, "
                    f"max={rows[-1].max_max_abs_e_y:.3f} m over {len(solved)} transitions")
    return rows


def sweep_spacing(layout: FieldLayout, cfg: RunConfig, spacings: Iterable[float]) -> List[SpacingSweepRow]:
    """Re-plan and re-solve every transition at each grid spacing; reports LP size and jaggedness"""
    rows = []
    for ds in spacings:
        run_cfg = cfg.with_overrides(ds_m=float(ds), compute_coverage=False)
        _, solved, failed = _solve_transitions(layout, run_cfg)
        diagnostics = [r.smoothed.diagnostics for r in solved]
        rows.append(SpacingSweepRow(
            ds=float(ds),
            instances=len(solved),
            failed=failed,
            mean_n_u=_mean([d.n_u for d in diagnostics]),
            mean_n_cstrts=_mean([d.n_cstrts for d in diagnostics]),
            mean_max_abs_e_y=_mean([d.max_abs_e_y for d in diagnostics]),
            max_max_abs_e_y=_max([d.max_abs_e_y for d in diagnostics]),
            max_second_difference=_max([d.max_second_difference for d in diagnostics]),
        ))
        logger.info(f"D_s={ds:.2f} m: mean n_u={rows[-1].mean_n_u:.1f}, "
                    f"max second difference {rows[-1].max_second_difference:.4f} m")
    return rows


def saturated_study(params: VehicleParams, T_s: float, v: float) -> List[SaturationResult]:
    """Saturated turn from straight wheels and from full opposite lock"""
    results = [saturated_steering_simulation(params, T_s, v, delta0) for delta0 in (0.0, params.delta_min)]
    for r in results:
        logger.info(f"delta0={math.degrees(r.delta0):.1f} deg: envelope radius {r.envelope_radius:.3f} m, "
                    f"transition length {r.transition_length:.2f} m")
    return results


def write_rows_csv(rows: Sequence, path) -> Path:
    """Dataclass rows to CSV with a header row"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        if rows:
            writer.writerow([fl.name for fl in fields(rows[0])])
            for row in rows:
                writer.writerow([f"{v:.9g}" if isinstance(v, float) else v for v in asdict(row).values()])
    return path


def write_saturation_csv(results: Sequence[SaturationResult], T_s: float, path) -> Path:
    """One row per sample: initial steering, time, x, y, heading, steering (angles in degrees)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["delta0_deg", "t_s", "x_m", "y_m", "psi_deg", "delta_deg"])
        for r in results:
            for k, (x, y, psi, delta) in enumerate(r.trajectory):
                writer.writerow([f"{math.degrees(r.delta0):.6g}", f"{k * T_s:.6g}", f"{x:.9g}", f"{y:.9g}",
                                 f"{math.degrees(psi):.9g}", f"{math.degrees(delta):.9g}"])
    return path
