"""Stable throughput region of a cognitive-relay network with a finite relay buffer."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    AuxiliaryParams,
    ConfigError,
    EqMode,
    LinkOutages,
    SensingProfile,
    SystemConfig,
    auxiliary,
    load_config,
    validate,
)
from .analytic import (  # noqa: E402
    RateSolution,
    RegionBoundary,
    max_primary_rate,
    solve_fixed_point,
    trace_region,
)
from .sim import SimulationResult, simulate, stability_probe  # noqa: E402
from .oracle import JointStationary, build_chain, stationary  # noqa: E402
from ._backend import BACKEND  # noqa: E402

__all__ = [
    "AuxiliaryParams", "ConfigError", "EqMode", "LinkOutages", "SensingProfile",
    "SystemConfig", "auxiliary", "load_config", "validate",
    "RateSolution", "RegionBoundary", "max_primary_rate", "solve_fixed_point",
    "trace_region", "SimulationResult", "simulate", "stability_probe",
    "JointStationary", "build_chain", "stationary", "BACKEND",
]
