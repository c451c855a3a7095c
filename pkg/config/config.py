#!/usr/bin/env python3
"""
Headland Smoother Configuration
"""

import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values, load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Main configuration class"""

    # Base paths
    BASE_DIR = Path(__file__).parent.parent
    DATA_DIR = BASE_DIR / "data"
    OUTPUT_DIR = Path(os.getenv("SMOOTHER_OUTPUT_DIR", str(DATA_DIR / "output")))
    REGRESSION_FIELD = DATA_DIR / "regression_field.geojson"

    # System configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE_PATH = os.getenv("LOG_FILE_PATH", "")
    MAX_WORKERS = int(os.getenv("SMOOTHER_MAX_WORKERS", "4"))
    LP_DUMP_DIR = os.getenv("SMOOTHER_LP_DUMP_DIR", "")

    # Vehicle parameters used throughout all experiments
    WHEELBASE_M = float(os.getenv("SMOOTHER_WHEELBASE_M", "3.0"))
    DELTA_MAX_DEG = float(os.getenv("SMOOTHER_DELTA_MAX_DEG", "31.0"))
    DDELTA_MAX_DEG_S = float(os.getenv("SMOOTHER_DDELTA_MAX_DEG_S", "15.0"))
    V_REF_KMH = float(os.getenv("SMOOTHER_V_REF_KMH", "5.0"))

    # Planning grid and field
    DS_M = float(os.getenv("SMOOTHER_DS_M", "1.0"))
    OPERATING_WIDTH_M = float(os.getenv("SMOOTHER_OPERATING_WIDTH_M", "20.0"))
    THETA_EDGE_DEG = float(os.getenv("SMOOTHER_THETA_EDGE_DEG", "20.0"))
    RASTER_CELL_M = float(os.getenv("SMOOTHER_RASTER_CELL_M", "0.1"))
    CORNER_CUT_ITERATIONS = int(os.getenv("SMOOTHER_CORNER_CUT_ITERATIONS", "2"))

    @classmethod
    def ensure_directories(cls):
        """Create the output directory and, when file logging is on, the log directory"""
        directories = [cls.OUTPUT_DIR]
        if cls.LOG_FILE_PATH:
            directories.append(Path(cls.LOG_FILE_PATH).parent)
        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def validate_config(cls):
        """Validate numeric configuration"""
        positive = [
            ("SMOOTHER_WHEELBASE_M", cls.WHEELBASE_M),
            ("SMOOTHER_DELTA_MAX_DEG", cls.DELTA_MAX_DEG),
            ("SMOOTHER_DDELTA_MAX_DEG_S", cls.DDELTA_MAX_DEG_S),
            ("SMOOTHER_V_REF_KMH", cls.V_REF_KMH),
            ("SMOOTHER_DS_M", cls.DS_M),
            ("SMOOTHER_OPERATING_WIDTH_M", cls.OPERATING_WIDTH_M),
            ("SMOOTHER_THETA_EDGE_DEG", cls.THETA_EDGE_DEG),
            ("SMOOTHER_RASTER_CELL_M", cls.RASTER_CELL_M),
            ("SMOOTHER_MAX_WORKERS", cls.MAX_WORKERS),
        ]

        invalid = [name for name, value in positive if not value > 0]
        if cls.DELTA_MAX_DEG >= 90.0:
            invalid.append("SMOOTHER_DELTA_MAX_DEG")
        if cls.CORNER_CUT_ITERATIONS < 0:
            invalid.append("SMOOTHER_CORNER_CUT_ITERATIONS")
        if cls.LOG_LEVEL.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            invalid.append("LOG_LEVEL")
        if invalid:
            raise ValueError(f"Invalid configuration values: {', '.join(invalid)}")


class SolverConfig:
    """LP and smoothing constants"""

    # HiGHS dual simplex: deterministic, built-in anti-cycling
    LP_METHOD = "highs-ds"
    COST_SPLIT_RATIO = 1e9
    # first-level optimum held to this relative tolerance, on the row scaled to unit max coefficient
    LEVEL_HOLD_TOL = 1e-9
    SLACK_WEIGHT = 1e16
    TRANSITION_WEIGHT = 100.0
    WEIGHT_INDEX_RADIUS_M = 1.0
    TIP_CLEARANCE_MARGIN_M = 0.25
    RETRY_RADIUS_FACTOR = 1.25
    MIN_EXTENSION_M = 0.5
    # transition margins grow with R tan(phi/2) up to this turn
    MARGIN_TURN_CAP_DEG = 135.0


# Development vs Production settings
class DevelopmentConfig(Config):
    """Development-specific configuration: environment values as loaded"""


class ProductionConfig(Config):
    """Production-specific configuration"""
    LOG_LEVEL = "WARNING"


class TestingConfig(Config):
    """Testing-specific configuration"""
    LOG_LEVEL = "WARNING"
    RASTER_CELL_M = 0.5
    MAX_WORKERS = 1


# Configuration selector
config_map = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(env=None):
    """Get configuration based on environment"""
    if env is None:
        env = os.getenv('SMOOTHER_ENV', 'default')
    return config_map.get(env, DevelopmentConfig)


# Create module-level config instance
config = get_config()


TURN_MODES = ("headland", "direct")


@dataclass(frozen=True)
class RunConfig:
    """
    User-facing run parameters in the units of the command line
    (degrees, km/h). Converted once by vehicle_params().
    """

    wheelbase_m: float = config.WHEELBASE_M
    delta_max_deg: float = config.DELTA_MAX_DEG
    ddelta_max_deg_s: float = config.DDELTA_MAX_DEG_S
    v_ref_kmh: float = config.V_REF_KMH
    ds_m: float = config.DS_M
    operating_width_m: float = config.OPERATING_WIDTH_M
    r_dubins_m: Optional[float] = None
    theta_edge_deg: float = config.THETA_EDGE_DEG
    raster_cell_m: float = config.RASTER_CELL_M
    corner_cut_iterations: int = config.CORNER_CUT_ITERATIONS
    lp_refinements: int = 1
    turn_mode: str = "headland"
    l_ext_m: Optional[float] = None
    weight_index_radius_m: float = SolverConfig.WEIGHT_INDEX_RADIUS_M
    pin_start_steering: bool = True
    pin_end_steering: bool = False
    lane_heading_deg: Optional[float] = None
    max_workers: int = config.MAX_WORKERS
    record_timings: bool = True
    compute_coverage: bool = True
    tyre_track_m: float = 2.0
    tyre_width_m: float = 0.5

    def __post_init__(self):
        positive = [
            "wheelbase_m", "delta_max_deg", "ddelta_max_deg_s", "v_ref_kmh", "ds_m",
            "operating_width_m", "theta_edge_deg", "raster_cell_m", "weight_index_radius_m",
            "max_workers", "tyre_track_m", "tyre_width_m",
        ]
        invalid = [name for name in positive if not getattr(self, name) > 0]
        if not self.delta_max_deg < 90.0:
            invalid.append("delta_max_deg")
        if self.r_dubins_m is not None and not self.r_dubins_m > 0:
            invalid.append("r_dubins_m")
        if self.l_ext_m is not None and not self.l_ext_m > 0:
            invalid.append("l_ext_m")
        if self.corner_cut_iterations < 0:
            invalid.append("corner_cut_iterations")
        if self.lp_refinements < 0:
            invalid.append("lp_refinements")
        if self.turn_mode not in TURN_MODES:
            invalid.append("turn_mode")
        if invalid:
            raise ValueError(f"Invalid run configuration: {', '.join(invalid)}")

    def vehicle_params(self):
        """Convert to internal SI units (rad, rad/s, m/s)"""
        from core.vehicle_dynamics import VehicleParams

        return VehicleParams(
            wheelbase=self.wheelbase_m,
            delta_max=math.radians(self.delta_max_deg),
            ddelta_max=math.radians(self.ddelta_max_deg_s),
            v_ref=self.v_ref_kmh / 3.6,
        )

    @property
    def theta_edge(self) -> float:
        return math.radians(self.theta_edge_deg)

    @property
    def min_turning_radius(self) -> float:
        return self.wheelbase_m / math.tan(math.radians(self.delta_max_deg))

    @property
    def r_dubins(self) -> float:
        """Dubins radius, defaulting to the minimum turning radius"""
        return self.r_dubins_m if self.r_dubins_m is not None else self.min_turning_radius

    @property
    def l_ext(self) -> float:
        if self.l_ext_m is not None:
            return self.l_ext_m
        from core.reference_gen import default_extension_length

        return default_extension_length(self.r_dubins)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "RunConfig":
        """Build from string or typed values, e.g. a key=value file"""
        return cls().with_overrides(**_parse_run_values(mapping))


def _parse_bool(name: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"Invalid boolean for {name}: {value!r}")


def _parse_run_values(mapping: Mapping[str, Any]) -> Dict[str, Any]:
    types = {f.name: f.type for f in fields(RunConfig)}
    parsed = {}
    for key, value in mapping.items():
        name = key.strip().lower().replace("-", "_")
        if name not in types:
            raise ValueError(f"Unknown run configuration key: {key}")
        kind = str(types[name])
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
            if "Optional" not in kind:
                raise ValueError(f"Missing value for {key}")
            parsed[name] = None
            continue
        try:
            if "bool" in kind:
                parsed[name] = _parse_bool(key, value)
            elif "int" in kind:
                parsed[name] = int(value)
            elif "float" in kind:
                parsed[name] = float(value)
            else:
                parsed[name] = str(value).strip()
        except (TypeError, ValueError) as e:
            raise ValueError(f"Invalid value for {key}: {value!r} ({e})") from e
    return parsed


def load_run_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Load a RunConfig: defaults < environment < flat key=value file < overrides
    """
    values: Dict[str, Any] = {}
    if path:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"Run configuration file not found: {file_path}")
        values.update({k: v for k, v in dotenv_values(file_path).items()})
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_mapping(values)
