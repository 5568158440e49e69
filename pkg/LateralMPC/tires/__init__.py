"""Tire force models, their linearization and friction-ellipse capacity."""
from .tire_models import (
    PacejkaCoeffs,
    TireParams,
    TireOperatingPoint,
    TireLinearization,
    slip_angle,
    slip_angles,
    wheel_lever_arms,
    dugoff_lateral_force,
    pacejka_lateral_force,
    lateral_force,
    lateral_forces,
    linearize_tire,
    linearize_wheels,
    peak_longitudinal_force,
    effective_radius,
)

__all__ = [
    "PacejkaCoeffs",
    "TireParams",
    "TireOperatingPoint",
    "TireLinearization",
    "slip_angle",
    "slip_angles",
    "wheel_lever_arms",
    "dugoff_lateral_force",
    "pacejka_lateral_force",
    "lateral_force",
    "lateral_forces",
    "linearize_tire",
    "linearize_wheels",
    "peak_longitudinal_force",
    "effective_radius",
]
