"""Reactive-power set-point adaptation for a grid-connected drive.

Simulates a back-to-back converter drive under cascaded PI control and
compares two outer loops for the reactive-power set-point: an
activation-function controller and online feedback optimization.
"""

from .config import SimConfig, load_config
from .dq import DqVector
from .errors import (
    AssumptionViolated,
    GridLost,
    Infeasible,
    InsufficientTimescaleSeparation,
    InvalidArgument,
    InvalidConfiguration,
    NoContraction,
    SimError,
    SimulationDiverged,
)
from .scenarios import ScenarioSpec
from .simulate import RunResult, ScenarioTrace, run_scenario

__version__ = "0.1.0"

__all__ = [
    "SimConfig",
    "load_config",
    "DqVector",
    "ScenarioSpec",
    "run_scenario",
    "RunResult",
    "ScenarioTrace",
    "SimError",
    "InvalidArgument",
    "InvalidConfiguration",
    "GridLost",
    "SimulationDiverged",
    "Infeasible",
    "AssumptionViolated",
    "NoContraction",
    "InsufficientTimescaleSeparation",
]
