"""
Continuous-time affine vehicle models

    x' = A x + E W + B U + D              (general electric vehicle)
    x' = A x + E W + B U + D + C_phi phi_r (very-high-speed racing model)

with `W` the driver command [Q1, d1, ..., Q4, d4] and `U` the control delta
[dQ1, dd1, ..., dQ4, dd4]. The tire forces enter through their
linearization about the current operating point; they are rotated into the
body frame at each corner (`wheel_rotation_map`) and summed to the
longitudinal force, lateral force and yaw moment at the center of gravity
(`cog_map`). Wheels are ordered front left, front right, rear left, rear
right. Axes follow ISO 8855: x forward, y left, z up.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import block_diag

from ..exceptions import DimensionError, DomainError, ModelError
from ..tires import (TireLinearization, lateral_forces, linearize_wheels,
                     slip_angles, wheel_lever_arms)
from .params import (GRAVITY, ActuatorConfig, GeneralEvParams, ModelKind,
                     VhsParams)

N_STATES = {ModelKind.GENERAL_EV: 8, ModelKind.VHS: 5}
N_INPUTS = 8

# Position of (v, r) and (phi, phi') in the state vector.
LATERAL_INDEX = {ModelKind.GENERAL_EV: 0, ModelKind.VHS: 1}
ROLL_INDEX = {ModelKind.GENERAL_EV: 2, ModelKind.VHS: 3}


@dataclass(frozen=True, eq=False)
class VehicleModel:
    """
    Assembled affine model at one operating point.

    Attributes
    ----------
    * `kind` [ModelKind]
    * `A` [array, shape=(n_x, n_x)]
    * `B` [array, shape=(n_x, 8)]: control-delta input matrix, masked.
    * `E` [array, shape=(n_x, 8)]: driver-command input matrix.
    * `D` [array, shape=(n_x,)]: affine offset, including `C_phi * phi_r`
      for the racing model.
    * `C_phi` [array, shape=(n_x,) or None]: banking gain.
    * `linearizations` [tuple of 4 TireLinearization]
    * `W0` [array, shape=(8,)]: driver command the model was built for.
    * `u` [float]: longitudinal velocity.
    * `phi_r` [float]: banking angle included in `D`.
    * `params`: parameter set that produced the model.
    """
    kind: ModelKind
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    D: np.ndarray
    C_phi: Optional[np.ndarray]
    linearizations: Tuple[TireLinearization, ...]
    W0: np.ndarray
    u: float
    phi_r: float
    params: object

    @property
    def n_x(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B.shape[1]

    @property
    def offset(self) -> np.ndarray:
        """Constant forcing E W0 + D seen when W is held at W0."""
        return self.E @ self.W0 + self.D

    def derivative(self, x, U=None):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_x,):
            raise DimensionError(
                f"State must have shape ({self.n_x},), got {x.shape}.")
        dx = self.A @ x + self.offset
        if U is not None:
            dx = dx + self.B @ np.asarray(U, dtype=float)
        return dx


def _check_speed(u):
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")


def tire_affine_maps(linearizations, u: float, l_f: float, l_r: float,
                     r_eff: float, n_x: int = 4, lateral_index: int = 0):
    """
    Affine maps from body states and wheel inputs to the local tire forces.

    The local force of wheel i is [f_x, f_y] = B1_i x + B2_i W_i + D1_i,
    with the slip angle delta_i - (v + a_i r) / u substituted into the
    linearized lateral force.

    Parameters
    ----------
    * `linearizations` [sequence of 4 TireLinearization]

    * `u` [float]:
        Longitudinal velocity in m/s.

    * `l_f`, `l_r`, `r_eff` [float]:
        Axle distances and effective wheel radius in m.

    * `n_x` [int, default=4]:
        Number of body states.

    * `lateral_index` [int, default=0]:
        Index of the lateral velocity; the yaw rate must follow it.

    Returns
    -------
    * `B1` [array, shape=(8, n_x)]
    * `B2` [array, shape=(8, 8)]
    * `D1` [array, shape=(8,)]
    """
    _check_speed(u)
    if len(linearizations) != 4:
        raise DimensionError("Exactly four tire linearizations are required.")
    arms = wheel_lever_arms(l_f, l_r)
    B1 = np.zeros((8, n_x))
    B2 = np.zeros((8, 8))
    D1 = np.zeros(8)
    for i, (lin, a_i) in enumerate(zip(linearizations, arms)):
        c = lin.c_alpha_tilde
        B1[2 * i + 1, lateral_index] = -c / u
        B1[2 * i + 1, lateral_index + 1] = -a_i * c / u
        B2[2 * i, 2 * i] = 1.0 / r_eff
        B2[2 * i + 1, 2 * i + 1] = c
        D1[2 * i + 1] = lin.f_y_bar - c * lin.alpha_bar
    return B1, B2, D1


def wheel_rotation_map(steering) -> np.ndarray:
    """Block-diagonal rotation L_w taking local tire forces to corner
    forces in the body frame."""
    steering = np.asarray(steering, dtype=float)
    if steering.shape != (4,):
        raise DimensionError("Four steering angles are required.")
    c, s = np.cos(steering), np.sin(steering)
    return block_diag(*[np.array([[c[i], -s[i]], [s[i], c[i]]])
                        for i in range(4)])


def cog_map(t_f: float, t_r: float, l_f: float, l_r: float) -> np.ndarray:
    """L_c summing corner forces into (F_X, F_Y, M_Z) at the center of
    gravity."""
    return np.array([
        [1, 0, 1, 0, 1, 0, 1, 0],
        [0, 1, 0, 1, 0, 1, 0, 1],
        [-t_f / 2, l_f, t_f / 2, l_f, -t_r / 2, -l_r, t_r / 2, -l_r],
    ], dtype=float)


def body_matrices_general(p: GeneralEvParams, u: float):
    """
    Body matrices of the lateral, yaw and roll dynamics of the general
    vehicle, states [v, r, phi, phi'].

    Returns
    -------
    * `A_F` [array, shape=(4, 4)]
    * `B_F` [array, shape=(4, 3)]:
        Maps (F_X, F_Y, M_Z) to the state derivative.
    """
    den = p.m * p.I_xx - p.m_s ** 2 * p.h_s ** 2
    if not den > 0:
        raise ModelError(
            f"m I_xx - m_s^2 h_s^2 = {den} must be positive.")
    k_eff = p.k_phi - p.m_s * GRAVITY * p.h_s
    A_F = np.array([
        [0, -u, p.m_s * p.h_s * k_eff / den, p.m_s * p.h_s * p.c_phi / den],
        [0, 0, 0, 0],
        [0, 0, 0, 1],
        [0, 0, -p.m * k_eff / den, -p.m * p.c_phi / den],
    ], dtype=float)
    B_F = np.zeros((4, 3))
    B_F[0, 1] = p.I_xx / den
    B_F[1, 2] = 1.0 / p.I_zz
    B_F[3, 1] = p.m_s * p.h_s / den
    return A_F, B_F


def wheel_dynamics(p: GeneralEvParams):
    """
    Wheel-spin dynamics I_w w' = Q + dQ - r_eff f_x with the longitudinal
    force f_x = Q / r_eff, so only the torque delta accelerates a wheel.

    Returns
    -------
    * `A_w` [array, shape=(4, 4)]
    * `E_w` [array, shape=(4, 8)]
    * `B_w` [array, shape=(4, 8)]: unmasked.
    * `D_w` [array, shape=(4,)]
    """
    if not p.I_w > 0:
        raise ModelError("I_w must be positive.")
    B_w = np.zeros((4, 8))
    B_w[np.arange(4), 2 * np.arange(4)] = 1.0 / p.I_w
    # Q_i and the reaction r_eff * Q_i / r_eff cancel
    E_w = np.zeros((4, 8))
    return np.zeros((4, 4)), E_w, B_w, np.zeros(4)


def body_matrices_vhs(p: VhsParams, u: float):
    """
    Body matrices of the racing model, states [y, v_y, r, phi, phi'].

    Returns
    -------
    * `A_F` [array, shape=(5, 5)]
    * `B_F` [array, shape=(5, 3)]
    * `C_phi` [array, shape=(5,)]
    """
    m, m_s, h_s, I_xx = p.m, p.m_s, p.h_s, p.I_xx
    den = m * (I_xx + h_s ** 2 * m - h_s ** 2 * m_s)
    if not den > 0:
        raise ModelError(
            f"m (I_xx + h_s^2 m - h_s^2 m_s) = {den} must be positive.")
    spring = p.k_s * p.l_s ** 2
    damper = p.b_s * p.l_s ** 2
    A_F = np.zeros((5, 5))
    A_F[0, 1] = 1.0
    A_F[1, 2] = -u
    A_F[1, 3] = (-GRAVITY * h_s ** 2 * m * m_s + 0.5 * h_s * spring * m_s) / den
    A_F[1, 4] = damper * h_s * m_s / den
    A_F[3, 4] = 1.0
    A_F[4, 3] = (GRAVITY * h_s * m ** 2 - 0.5 * spring * m) / den
    A_F[4, 4] = -damper * m / den
    B_F = np.zeros((5, 3))
    B_F[1, 1] = (I_xx + m * h_s ** 2) / den
    B_F[2, 2] = 1.0 / p.I_zz
    B_F[4, 1] = m * h_s / (2 * den)
    C_phi = np.zeros(5)
    C_phi[1] = GRAVITY * (m ** 2 * h_s ** 2 + I_xx * m) / den
    C_phi[4] = -GRAVITY * h_s * m ** 2 / den
    return A_F, B_F, C_phi


def _command(W0):
    W0 = np.asarray(W0, dtype=float)
    if W0.shape != (N_INPUTS,):
        raise DimensionError(f"Driver command must have shape (8,), got {W0.shape}.")
    if not np.all(np.isfinite(W0)):
        raise DimensionError("Driver command contains non-finite values.")
    return W0


def _force_chain(p, u, lin, W0, n_x, lateral_index, B_F):
    B1, B2, D1 = tire_affine_maps(lin, u, p.l_f, p.l_r, p.r_eff,
                                  n_x=n_x, lateral_index=lateral_index)
    chain = B_F @ cog_map(p.t_f, p.t_r, p.l_f, p.l_r) @ wheel_rotation_map(W0[1::2])
    return chain @ B1, chain @ B2, chain @ D1


def assemble_general(p: GeneralEvParams, u: float, lin, W0,
                     T_w: ActuatorConfig) -> VehicleModel:
    """
    Assemble the eight-state model [v, r, phi, phi', w1, w2, w3, w4].

    Parameters
    ----------
    * `p` [GeneralEvParams]

    * `u` [float]:
        Longitudinal velocity in m/s.

    * `lin` [sequence of 4 TireLinearization]:
        Tire linearizations at the operating point.

    * `W0` [array, shape=(8,)]:
        Driver command; its steering angles set the corner rotations.

    * `T_w` [ActuatorConfig]:
        Channels the controller may use.
    """
    _check_speed(u)
    W0 = _command(W0)
    A_F, B_F = body_matrices_general(p, u)
    A_w, E_w, B_w, D_w = wheel_dynamics(p)
    chain_B1, E_b, D_b = _force_chain(p, u, lin, W0, 4, 0, B_F)
    T = T_w.matrix
    return VehicleModel(
        kind=ModelKind.GENERAL_EV,
        A=block_diag(A_F + chain_B1, A_w),
        B=np.vstack([E_b, B_w]) @ T,
        E=np.vstack([E_b, E_w]),
        D=np.concatenate([D_b, D_w]),
        C_phi=None,
        linearizations=tuple(lin),
        W0=W0,
        u=float(u),
        phi_r=0.0,
        params=p,
    )


def assemble_vhs(p: VhsParams, u: float, lin, W0, T_w: ActuatorConfig,
                 phi_r: Optional[float] = None) -> VehicleModel:
    """Assemble the five-state racing model [y, v_y, r, phi, phi'].
    `phi_r` defaults to the banking angle of `p`; its forcing is added to
    `D` and the gain kept in `C_phi`."""
    _check_speed(u)
    W0 = _command(W0)
    phi_r = p.phi_r if phi_r is None else float(phi_r)
    A_F, B_F, C_phi = body_matrices_vhs(p, u)
    chain_B1, E_b, D_b = _force_chain(p, u, lin, W0, 5, 1, B_F)
    return VehicleModel(
        kind=ModelKind.VHS,
        A=A_F + chain_B1,
        B=E_b @ T_w.matrix,
        E=E_b,
        D=D_b + C_phi * phi_r,
        C_phi=C_phi,
        linearizations=tuple(lin),
        W0=W0,
        u=float(u),
        phi_r=phi_r,
        params=p,
    )


def assemble(p, u, lin, W0, T_w, phi_r=None) -> VehicleModel:
    if p.model_kind == ModelKind.VHS:
        return assemble_vhs(p, u, lin, W0, T_w, phi_r=phi_r)
    return assemble_general(p, u, lin, W0, T_w)


def _roll_coefficients(p):
    """Per-axle roll stiffness and damping."""
    if p.model_kind == ModelKind.VHS:
        return 0.5 * p.k_s * p.l_s ** 2, 0.5 * p.b_s * p.l_s ** 2
    return 0.5 * p.k_phi, 0.5 * p.c_phi


def normal_loads(state, p, phi_r: float = 0.0, floor: bool = True) -> np.ndarray:
    """
    Normal load of each wheel: static share plus the roll-moment transfer
    (k phi_eff + c phi') / t per axle with phi_eff = phi - phi_r. Positive
    roll loads the right wheels.

    Parameters
    ----------
    * `state` [array]:
        Model state of either layout.

    * `p` [GeneralEvParams or VhsParams]

    * `phi_r` [float, default=0]:
        Banking angle in rad.

    * `floor` [bool, default=True]:
        Clip negative loads (wheel lift) to zero. The unclipped loads sum
        to m g.
    """
    state = np.asarray(state, dtype=float)
    kind = p.model_kind
    if state.shape != (N_STATES[kind],):
        raise DimensionError(
            f"State must have shape ({N_STATES[kind]},), got {state.shape}.")
    weight = p.m * GRAVITY
    if p.static_load_split == "even":
        static = np.full(4, weight / 4)
    else:
        front = weight * p.l_r / (2 * p.l)
        rear = weight * p.l_f / (2 * p.l)
        static = np.array([front, front, rear, rear])
    k_axle, c_axle = _roll_coefficients(p)
    roll = ROLL_INDEX[kind]
    phi, phi_dot = state[roll], state[roll + 1]
    moment = k_axle * (phi - phi_r) + c_axle * phi_dot
    transfer = np.array([-moment / p.t_f, moment / p.t_f,
                         -moment / p.t_r, moment / p.t_r])
    loads = static + transfer
    if floor:
        loads = np.maximum(loads, 0.0)
    return loads


def wheel_slip_angles(state, W0, p, u) -> np.ndarray:
    """Slip angles of the four wheels at a state and driver command."""
    state = np.asarray(state, dtype=float)
    index = LATERAL_INDEX[p.model_kind]
    v, r = state[index], state[index + 1]
    return slip_angles(np.asarray(W0, dtype=float)[1::2], v, r, u, p.l_f, p.l_r)


def operating_point(state, W0, p, u, phi_r=0.0, steering=None):
    """
    Slip angles, floored normal loads, nonlinear lateral forces and tire
    linearizations at a state.

    `steering` overrides the wheel angles taken from `W0`, e.g. to include
    a steering delta.
    """
    if steering is None:
        alpha = wheel_slip_angles(state, W0, p, u)
    else:
        index = LATERAL_INDEX[p.model_kind]
        alpha = slip_angles(steering, state[index], state[index + 1], u,
                            p.l_f, p.l_r)
    f_z = normal_loads(state, p, phi_r=phi_r)
    f_y = lateral_forces(alpha, f_z, p.tire)
    lin = linearize_wheels(alpha, f_z, p.tire)
    return alpha, f_z, f_y, lin
