"""Monte-Carlo time-series simulation of PEV-driven asset wear and cost on a radial feeder."""

__version__ = "0.1.0"

from .feeder import FeederModel, build_builtin_feeder, loading_factor, solve_power_flow
from .mcs import RunConfig, run_mcs, run_scenario

__all__ = [
    "FeederModel",
    "RunConfig",
    "build_builtin_feeder",
    "loading_factor",
    "run_mcs",
    "run_scenario",
    "solve_power_flow",
]
