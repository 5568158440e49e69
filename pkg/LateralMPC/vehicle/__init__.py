"""Vehicle parameter sets and the affine state-space models built from
them."""
from .params import (
    GRAVITY,
    ModelKind,
    ActuatorConfig,
    GeneralEvParams,
    VhsParams,
    PARAMS_BY_KIND,
    axle_masses,
    load_vehicle,
    save_vehicle,
)
from .models import (
    N_STATES,
    N_INPUTS,
    LATERAL_INDEX,
    ROLL_INDEX,
    VehicleModel,
    tire_affine_maps,
    wheel_rotation_map,
    cog_map,
    body_matrices_general,
    wheel_dynamics,
    body_matrices_vhs,
    assemble_general,
    assemble_vhs,
    assemble,
    normal_loads,
    wheel_slip_angles,
    operating_point,
)

__all__ = [
    "GRAVITY",
    "ModelKind",
    "ActuatorConfig",
    "GeneralEvParams",
    "VhsParams",
    "PARAMS_BY_KIND",
    "axle_masses",
    "load_vehicle",
    "save_vehicle",
    "N_STATES",
    "N_INPUTS",
    "LATERAL_INDEX",
    "ROLL_INDEX",
    "VehicleModel",
    "tire_affine_maps",
    "wheel_rotation_map",
    "cog_map",
    "body_matrices_general",
    "wheel_dynamics",
    "body_matrices_vhs",
    "assemble_general",
    "assemble_vhs",
    "assemble",
    "normal_loads",
    "wheel_slip_angles",
    "operating_point",
]
