"""Nonlinear plant used to close the loop around the controller.

The plant shares the force pathway of the prediction models (corner
rotation, summation at the center of gravity, body matrices) but evaluates
the full tire law at the instantaneous slip angles and normal loads.
"""
import numpy as np

from ..exceptions import ConfigurationError, DimensionError, DomainError
from ..tires import lateral_forces
from ..vehicle.models import (N_INPUTS, N_STATES, body_matrices_general,
                              body_matrices_vhs, cog_map, normal_loads,
                              wheel_dynamics, wheel_rotation_map,
                              wheel_slip_angles)
from ..vehicle.params import ModelKind

TIRE_MODES = ("nonlinear", "linearized")


def _vector(value, size, name):
    value = np.zeros(size) if value is None else np.asarray(value, dtype=float)
    if value.shape != (size,):
        raise DimensionError(f"{name} must have shape ({size},), got {value.shape}.")
    return value


def plant_derivatives(state, command, delta, params, u, phi_r=0.0):
    """
    State derivative of the nonlinear vehicle.

    Parameters
    ----------
    * `state` [array]:
        Plant state, 8 entries for the general vehicle and 5 for the
        racing model.

    * `command` [array, shape=(8,)]:
        Driver command W. Its steering sets the slip angles and its torques
        the longitudinal tire forces.

    * `delta` [array, shape=(8,), optional]:
        Control delta U added to the command. Torque deltas also spin up
        the wheels of the general vehicle.

    * `params` [GeneralEvParams or VhsParams]

    * `u` [float]:
        Longitudinal velocity in m/s.

    * `phi_r` [float, default=0.0]:
        Banking angle in rad.

    Returns
    -------
    * `dx` [array]:
        Time derivative of `state`.
    """
    kind = params.model_kind
    state = _vector(state, N_STATES[kind], "State")
    command = _vector(command, N_INPUTS, "Command")
    delta = _vector(delta, N_INPUTS, "Delta")
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    applied = command + delta
    steering = applied[1::2]

    alpha = wheel_slip_angles(state, applied, params, u)
    f_z = normal_loads(state, params, phi_r=phi_r)
    local = np.empty(8)
    local[0::2] = applied[0::2] / params.r_eff
    local[1::2] = lateral_forces(alpha, f_z, params.tire)
    forces = cog_map(params.t_f, params.t_r, params.l_f, params.l_r) \
        @ wheel_rotation_map(steering) @ local

    if kind == ModelKind.VHS:
        A_F, B_F, C_phi = body_matrices_vhs(params, u)
        return A_F @ state + B_F @ forces + C_phi * phi_r
    A_F, B_F = body_matrices_general(params, u)
    A_w, E_w, B_w, D_w = wheel_dynamics(params)
    body = A_F @ state[:4] + B_F @ forces
    wheels = A_w @ state[4:] + E_w @ command + B_w @ delta + D_w
    return np.concatenate([body, wheels])


def rk4_step(fun, state, inputs, sample_time, n_substeps=1):
    """
    Classical fourth-order Runge-Kutta over one sample with `inputs` held.

    Parameters
    ----------
    * `fun` [callable]:
        `fun(state, inputs)` returning the state derivative.

    * `state` [array]

    * `inputs`:
        Passed through to `fun` unchanged.

    * `sample_time` [float]:
        Length of the sample in s.

    * `n_substeps` [int, default=1]:
        Number of equal Runge-Kutta steps the sample is split into.
    """
    if not sample_time > 0:
        raise DomainError(f"sample_time must be positive, got {sample_time}.")
    if int(n_substeps) < 1:
        raise ConfigurationError(f"n_substeps must be at least 1, got {n_substeps}.")
    h = sample_time / int(n_substeps)
    x = np.asarray(state, dtype=float)
    for _ in range(int(n_substeps)):
        k1 = fun(x, inputs)
        k2 = fun(x + 0.5 * h * k1, inputs)
        k3 = fun(x + 0.5 * h * k2, inputs)
        k4 = fun(x + h * k3, inputs)
        x = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return x


class Plant(object):
    """
    Vehicle integrated between controller samples.

    Parameters
    ----------
    * `params` [GeneralEvParams or VhsParams]

    * `speed` [float]:
        Constant longitudinal velocity in m/s.

    * `phi_r` [float, default=0.0]:
        Banking angle in rad.

    * `substeps` [int, default=10]:
        Runge-Kutta steps per sample.

    * `tire_mode` [str, default="nonlinear"]:
        `"nonlinear"` evaluates the tire law at every stage. `"linearized"`
        integrates the affine model the controller predicted with, which
        must then be passed to `step`.
    """

    def __init__(self, params, speed, phi_r=0.0, substeps=10,
                 tire_mode="nonlinear"):
        if tire_mode not in TIRE_MODES:
            raise ConfigurationError(
                f"tire_mode must be one of {TIRE_MODES}, got \"{tire_mode}\".")
        if not speed > 0:
            raise DomainError(f"Longitudinal velocity must be positive, got {speed}.")
        if int(substeps) < 1:
            raise ConfigurationError(f"substeps must be at least 1, got {substeps}.")
        self.params = params
        self.speed = float(speed)
        self.phi_r = float(phi_r)
        self.substeps = int(substeps)
        self.tire_mode = tire_mode

    def derivatives(self, state, command, delta=None):
        return plant_derivatives(state, command, delta, self.params,
                                 self.speed, self.phi_r)

    def step(self, state, command, delta, sample_time, model=None):
        """State after one sample with the command and delta held."""
        if self.tire_mode == "linearized":
            if model is None:
                raise ConfigurationError(
                    "The linearized plant needs the controller's model.")
            return rk4_step(lambda x, U: model.derivative(x, U), state,
                            _vector(delta, N_INPUTS, "Delta"), sample_time,
                            self.substeps)
        command = _vector(command, N_INPUTS, "Command")
        return rk4_step(lambda x, U: self.derivatives(x, command, U), state,
                        _vector(delta, N_INPUTS, "Delta"), sample_time,
                        self.substeps)
