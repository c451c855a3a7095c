"""
Headland Smoother Configuration

This package contains configuration management:
- Environment-backed defaults and deployment profiles
- Solver constants for the smoothing LPs
- Run parameters in command-line units with a key=value file loader
"""

from .config import Config, SolverConfig, RunConfig, get_config, load_run_config

__version__ = "1.0.0"
__all__ = ["Config", "SolverConfig", "RunConfig", "get_config", "load_run_config"]
