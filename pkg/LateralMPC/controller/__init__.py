"""Constraint rows, discretization, finite-horizon problem construction and
the receding-horizon controller."""
from .constraints import (
    ConstraintSet,
    rollover_coeffs,
    rollover_index,
    slip_speed_bounds,
    state_rows,
    input_rows,
    build_constraints,
)
from .discretization import DiscreteModel, zoh, discretize
from .cftoc import (
    prediction_matrices,
    build_cftoc,
    build_sparse_cftoc,
    extract_inputs,
    predict_states,
)
from .mpc import MpcConfig, MpcController, create_step_result

__all__ = [
    "ConstraintSet",
    "rollover_coeffs",
    "rollover_index",
    "slip_speed_bounds",
    "state_rows",
    "input_rows",
    "build_constraints",
    "DiscreteModel",
    "zoh",
    "discretize",
    "prediction_matrices",
    "build_cftoc",
    "build_sparse_cftoc",
    "extract_inputs",
    "predict_states",
    "MpcConfig",
    "MpcController",
    "create_step_result",
]
