#!/usr/bin/env python3
"""
Regression run: smooth every instance of the shipped field, write the plan,
report and figure, then check the saturated-turn envelope, the per-instance
solve time, the Bezier baseline and the Dubins radius trend.
Exit code 0 when every check holds, 2 otherwise.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.config import Config, RunConfig, get_config  # noqa: E402
from core.cli_io import _configure_logging, emit_outputs, load_field, run_pipeline  # noqa: E402
from core.reference_gen import SegmentKind  # noqa: E402
from core.studies import saturated_study, sweep_radius  # noqa: E402

logger = logging.getLogger("regression")

SWEEP_RADII = (5.0, 5.33, 7.0)
SOLVE_LIMIT_S = 0.05


def _strictly_falling(values):
    return all(a > b for a, b in zip(values, values[1:]))


def check_saturation(cfg: RunConfig) -> bool:
    params = cfg.vehicle_params()
    results = saturated_study(params, 0.01, params.v_ref)
    ok = 4.98 <= params.min_turning_radius <= 5.0
    ok = ok and all(5.2 <= r.envelope_radius <= 5.5 for r in results)
    logger.info(f"R_min {params.min_turning_radius:.3f} m, envelope radii "
                f"{', '.join(f'{r.envelope_radius:.3f}' for r in results)} m (delta0 = "
                f"{', '.join(f'{math.degrees(r.delta0):.0f}' for r in results)} deg)")
    return ok


def check_field(layout, cfg: RunConfig, out_dir: Path) -> bool:
    result = run_pipeline(layout, cfg)
    emit_outputs(result.plan, result.report, result.raster, out_dir, layout, result.instances)

    corners = [r for r in result.report.rows if r.kind == SegmentKind.HEADLAND_CORNER.value]
    slowest = max((i.smoothed.diagnostics.total_solve_time for i in result.instances), default=float("nan"))
    logger.info(f"{len(result.instances)} instances solved, {len(result.failures)} failed, "
                f"plan length {result.plan.length:.1f} m, slowest instance {1000 * slowest:.1f} ms")
    if result.gaps is not None:
        logger.info(f"Gap area {result.gaps.gap_area:.2f} m2 in {len(result.gaps.regions)} regions")
    for segment_id, error in result.failures.items():
        logger.error(f"{segment_id}: {error}")
    bezier_ok = bool(corners) and all(r.bezier_drivable is False for r in corners)
    return not result.failures and bezier_ok and slowest <= SOLVE_LIMIT_S


def check_radius_trend(layout, cfg: RunConfig) -> bool:
    rows = sweep_radius(layout, cfg, SWEEP_RADII)
    means = [r.mean_max_abs_e_y for r in rows]
    maxima = [r.max_max_abs_e_y for r in rows]
    return (_strictly_falling(means) and _strictly_falling(maxima) and maxima[-1] <= 0.10
            and 0.05 <= means[0] <= 1.0 and not any(r.failed for r in rows))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Config.OUTPUT_DIR / "regression")
    args = parser.parse_args(argv)
    _configure_logging(get_config())

    cfg = RunConfig(record_timings=False)
    layout = load_field(Config.REGRESSION_FIELD, cfg.operating_width_m)
    checks = {
        "saturated turn": check_saturation(cfg),
        "regression field": check_field(layout, cfg, args.out),
        "radius trend": check_radius_trend(layout, cfg),
    }
    for name, ok in checks.items():
        print(f"{'✅' if ok else '❌'} {name}")
    print(f"Outputs in {args.out}")
    return 0 if all(checks.values()) else 2


if __name__ == "__main__":
    sys.exit(main())
