"""
State and input constraint rows of one horizon step.

Every row reads  lower <= G_x x + G_u U <= upper.  State rows (rollover
index, yaw rate, wheel slip speed, slip angles) are soft and relaxed by a
shared slack in the optimal control problem; input rows (torque band,
friction capacity, steering band) are hard.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import DimensionError, DomainError
from ..tires import peak_longitudinal_force
from ..vehicle.models import (LATERAL_INDEX, N_INPUTS, N_STATES, ROLL_INDEX,
                              normal_loads)
from ..vehicle.params import GRAVITY, ActuatorConfig, ModelKind


@dataclass
class ConstraintSet:
    """
    Stacked linear inequality rows.

    Attributes
    ----------
    * `G_x` [array, shape=(n_rows, n_x)]
    * `G_u` [array, shape=(n_rows, 8)]
    * `lower`, `upper` [array, shape=(n_rows,)]
    * `soft` [array of bool, shape=(n_rows,)]
    * `slack_weight` [float]: quadratic slack penalty sigma.
    * `names` [list of str]: one label per row.
    """
    G_x: np.ndarray
    G_u: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    soft: np.ndarray
    slack_weight: float = 0.1
    names: List[str] = field(default_factory=list)

    def __post_init__(self):
        n_rows = len(self.lower)
        if not (self.G_x.shape[0] == self.G_u.shape[0] == n_rows
                == len(self.upper) == len(self.soft)):
            raise DimensionError("Constraint rows have inconsistent lengths.")
        if self.names and len(self.names) != n_rows:
            raise DimensionError("One name per constraint row is required.")
        if np.any(self.lower > self.upper):
            bad = np.flatnonzero(self.lower > self.upper)
            raise DomainError(f"Constraint rows {bad.tolist()} have lower > upper.")

    @property
    def n_rows(self):
        return len(self.lower)

    @classmethod
    def empty(cls, n_x, slack_weight=0.1):
        return cls(np.zeros((0, n_x)), np.zeros((0, N_INPUTS)), np.zeros(0),
                   np.zeros(0), np.zeros(0, dtype=bool), slack_weight, [])

    def stack(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(
            G_x=np.vstack([self.G_x, other.G_x]),
            G_u=np.vstack([self.G_u, other.G_u]),
            lower=np.concatenate([self.lower, other.lower]),
            upper=np.concatenate([self.upper, other.upper]),
            soft=np.concatenate([self.soft, other.soft]),
            slack_weight=self.slack_weight,
            names=list(self.names) + list(other.names),
        )

    @property
    def state_part(self):
        return self._select(self.soft)

    @property
    def input_part(self):
        return self._select(~self.soft)

    def _select(self, rows):
        names = [name for name, keep in zip(self.names, rows) if keep]
        return ConstraintSet(self.G_x[rows], self.G_u[rows], self.lower[rows],
                             self.upper[rows], self.soft[rows],
                             self.slack_weight, names)

    def input_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-channel bounds on U implied by the single-channel hard
        rows. Channels without a row are unbounded."""
        lower = np.full(N_INPUTS, -np.inf)
        upper = np.full(N_INPUTS, np.inf)
        for row in np.flatnonzero(~self.soft):
            if np.any(self.G_x[row]):
                continue
            channels = np.flatnonzero(self.G_u[row])
            if len(channels) != 1:
                continue
            j = channels[0]
            gain = self.G_u[row, j]
            lo, hi = sorted((self.lower[row] / gain, self.upper[row] / gain))
            lower[j] = max(lower[j], lo)
            upper[j] = min(upper[j], hi)
        return lower, upper

    def violation(self, x, U=None) -> np.ndarray:
        """Amount by which each row is violated at (x, U), zero when
        satisfied."""
        value = self.G_x @ np.asarray(x, dtype=float)
        if U is not None:
            value = value + self.G_u @ np.asarray(U, dtype=float)
        return np.maximum(np.maximum(self.lower - value, value - self.upper), 0.0)


def rollover_coeffs(p) -> Tuple[float, float]:
    """
    Coefficients of the rollover index RI = C1 phi + C2 phi'.

    With H = m_s h_R + m_u h_u and T the mean track width,

        C1 = 2 / (m g T) (k_phi (1 + H / (m_s h_s)) - H g)
        C2 = 2 c_phi / (m g T) (1 + H / (m_s h_s))
    """
    H = p.m_s * p.h_R + p.m_u * p.h_u
    scale = 2.0 / (p.m * GRAVITY * p.track)
    lever = 1.0 + H / (p.m_s * p.h_s)
    return (scale * (p.k_phi * lever - H * GRAVITY),
            scale * p.c_phi * lever)


def rollover_index(state, p, phi_r=0.0) -> float:
    """Rollover index of a state. The racing model has no roll-stiffness
    data for the coefficient form and uses the lateral load-transfer ratio
    (right - left) / total of the unfloored normal loads instead."""
    state = np.asarray(state, dtype=float)
    if p.model_kind == ModelKind.VHS:
        loads = normal_loads(state, p, phi_r=phi_r, floor=False)
        return float((loads[1] + loads[3] - loads[0] - loads[2]) / loads.sum())
    C1, C2 = rollover_coeffs(p)
    return float(C1 * state[2] + C2 * state[3])


def slip_speed_bounds(u: float, omega_i: float, r_eff: float,
                      lambda_max: float) -> Tuple[float, float]:
    """Wheel-speed band u/r_eff -+ lambda_max max(u/r_eff, omega_i) that
    keeps the slip ratio below `lambda_max`."""
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    nominal = u / r_eff
    band = lambda_max * max(nominal, omega_i)
    return tuple(sorted((nominal - band, nominal + band)))


def state_rows(p, u: float, omega_current=None, slack_weight: float = 0.1,
               W0=None, T_w: Optional[ActuatorConfig] = None) -> ConstraintSet:
    """
    Soft rows.

    The general vehicle gets the rollover index, yaw rate, four wheel slip
    speeds and the rear slip angle; the racing model only the yaw rate and
    the rear slip angle. Every front wheel whose steering channel is enabled
    in `T_w` adds a slip-angle row over the state and its steering delta,

        -alpha_max <= d_i(0) + dd_i - (v + l_f r) / u <= alpha_max

    Slip angles follow the tire convention delta_i - (v + a_i r) / u, so the
    rear row bounds (l_r r - v) / u.

    Parameters
    ----------
    * `p` [GeneralEvParams or VhsParams]

    * `u` [float]:
        Longitudinal velocity in m/s.

    * `omega_current` [array, shape=(4,), optional]:
        Measured wheel speeds, defaults to u / r_eff.

    * `slack_weight` [float, default=0.1]

    * `W0` [array, shape=(8,), optional]:
        Command at the start of the horizon, shifts the steered-wheel rows.
        Zero when omitted.

    * `T_w` [ActuatorConfig, optional]:
        Without it no steered-wheel rows are added.
    """
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    kind = p.model_kind
    n_x = N_STATES[kind]
    lateral = LATERAL_INDEX[kind]
    W0 = np.zeros(N_INPUTS) if W0 is None else np.asarray(W0, dtype=float)
    if W0.shape != (N_INPUTS,):
        raise DimensionError(f"W0 must have shape (8,), got {W0.shape}.")
    rows, inputs, lower, upper, names = [], [], [], [], []

    def add(coeffs, lo, hi, name, channel=None):
        row = np.zeros(n_x)
        for index, value in coeffs.items():
            row[index] = value
        input_row = np.zeros(N_INPUTS)
        if channel is not None:
            input_row[channel] = 1.0
        rows.append(row)
        inputs.append(input_row)
        lower.append(lo)
        upper.append(hi)
        names.append(name)

    r_max = p.tire.mu_y * GRAVITY / u
    if kind == ModelKind.GENERAL_EV:
        C1, C2 = rollover_coeffs(p)
        roll = ROLL_INDEX[kind]
        add({roll: C1, roll + 1: C2}, -p.ri_c, p.ri_c, "rollover_index")
    add({lateral + 1: 1.0}, -r_max, r_max, "yaw_rate")
    if kind == ModelKind.GENERAL_EV:
        if omega_current is None:
            omega_current = np.full(4, u / p.r_eff)
        for i, omega in enumerate(omega_current):
            lo, hi = slip_speed_bounds(u, omega, p.r_eff, p.lambda_max)
            add({4 + i: 1.0}, lo, hi, f"slip_speed_{i + 1}")
    add({lateral: -1.0 / u, lateral + 1: p.l_r / u},
        -p.alpha_r_max, p.alpha_r_max, "rear_slip")
    if T_w is not None:
        for i in (0, 1):
            channel = 2 * i + 1
            if not T_w.mask[channel]:
                continue
            d0 = W0[channel]
            add({lateral: -1.0 / u, lateral + 1: -p.l_f / u},
                -p.alpha_r_max - d0, p.alpha_r_max - d0,
                f"front_slip_{i + 1}", channel=channel)

    n_rows = len(rows)
    return ConstraintSet(
        G_x=np.array(rows).reshape(n_rows, n_x),
        G_u=np.array(inputs).reshape(n_rows, N_INPUTS),
        lower=np.array(lower),
        upper=np.array(upper),
        soft=np.ones(n_rows, dtype=bool),
        slack_weight=slack_weight,
        names=names,
    )


def input_rows(W0, f_z0, f_y0, p, T_w: ActuatorConfig,
               slack_weight: float = 0.1) -> ConstraintSet:
    """
    Hard rows on the control delta, three families per wheel:

    * torque band  q_min - Q_i(0) <= dQ_i <= q_max - Q_i(0)
    * friction band  -r_eff f_p - Q_i(0) <= dQ_i <= r_eff f_p - Q_i(0),
      with f_p the longitudinal capacity left by the friction ellipse
      (the force capacity is turned into a torque through r_eff)
    * steering band  -delta_max - d_i(0) <= dd_i <= delta_max - d_i(0)

    Rows of disabled channels collapse to [0, 0].

    Parameters
    ----------
    * `W0` [array, shape=(8,)]:
        Driver command at the start of the horizon.

    * `f_z0`, `f_y0` [array, shape=(4,)]:
        Normal loads and lateral forces at the start of the horizon.

    * `p` [GeneralEvParams or VhsParams]

    * `T_w` [ActuatorConfig]
    """
    W0 = np.asarray(W0, dtype=float)
    f_z0 = np.asarray(f_z0, dtype=float)
    f_y0 = np.asarray(f_y0, dtype=float)
    if W0.shape != (N_INPUTS,) or f_z0.shape != (4,) or f_y0.shape != (4,):
        raise DimensionError("input_rows needs W0 of length 8 and four loads.")
    mask = T_w.mask
    rows, lower, upper, names = [], [], [], []
    for i in range(4):
        q0, d0 = W0[2 * i], W0[2 * i + 1]
        if f_z0[i] > 0:
            f_p = peak_longitudinal_force(f_z0[i], f_y0[i], p.tire)
        else:
            f_p = 0.0
        capacity = p.r_eff * f_p
        bands = (
            (2 * i, p.q_min - q0, p.q_max - q0, f"torque_{i + 1}"),
            (2 * i, -capacity - q0, capacity - q0, f"friction_{i + 1}"),
            (2 * i + 1, -p.delta_max - d0, p.delta_max - d0,
             f"steering_{i + 1}"),
        )
        for channel, lo, hi, name in bands:
            row = np.zeros(N_INPUTS)
            row[channel] = 1.0
            if not mask[channel]:
                lo = hi = 0.0
            rows.append(row)
            lower.append(lo)
            upper.append(hi)
            names.append(name)
    n_rows = len(rows)
    n_x = N_STATES[p.model_kind]
    return ConstraintSet(
        G_x=np.zeros((n_rows, n_x)),
        G_u=np.array(rows),
        lower=np.array(lower),
        upper=np.array(upper),
        soft=np.zeros(n_rows, dtype=bool),
        slack_weight=slack_weight,
        names=names,
    )


def build_constraints(p, u, W0, f_z0, f_y0, T_w, omega_current=None,
                      slack_weight=0.1) -> ConstraintSet:
    """Soft rows followed by input rows."""
    return state_rows(p, u, omega_current, slack_weight, W0=W0, T_w=T_w).stack(
        input_rows(W0, f_z0, f_y0, p, T_w, slack_weight))
