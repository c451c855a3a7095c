"""
Headland Smoother Scripts

This package contains utility scripts:
- Regression field run with acceptance checks
- Shell launcher for the command-line subcommands run from the project root
"""

__version__ = "1.0.0"
__all__ = []
