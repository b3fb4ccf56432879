"""Config-driven runs, figure reproductions and the command-line interface."""

from .config import ConfigError, Scenario, build_scenario, load_config
from .figures import run_figure2, run_figure4, run_figure5, run_positivity_check, run_sandwich_check

__all__ = [
    "ConfigError", "Scenario", "build_scenario", "load_config",
    "run_figure2", "run_figure4", "run_figure5", "run_positivity_check", "run_sandwich_check",
]
