"""Nonlinear plant, scenarios and closed-loop runs."""
from .plant import TIRE_MODES, Plant, plant_derivatives, rk4_step
from .scenario import (Scenario, load_scenario, mpc_config_for,
                       save_scenario)
from .metrics import STATE_NAMES, SimTrace, TraceRecorder, metrics
from .runner import (DEFAULT_SWEEP_SPEEDS, lateral_errors, run_scenario,
                     sweep_speeds)

__all__ = [
    "TIRE_MODES",
    "Plant",
    "plant_derivatives",
    "rk4_step",
    "Scenario",
    "load_scenario",
    "mpc_config_for",
    "save_scenario",
    "STATE_NAMES",
    "SimTrace",
    "TraceRecorder",
    "metrics",
    "DEFAULT_SWEEP_SPEEDS",
    "lateral_errors",
    "run_scenario",
    "sweep_speeds",
]
