"""Desired yaw rate, desired state vectors and checkpoint steering."""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, DomainError
from .vehicle.params import GRAVITY


@dataclass(frozen=True)
class Checkpoint:
    """Target point (x_d, y_d) in the vehicle frame, x_d ahead."""
    x_d: float
    y_d: float

    def __post_init__(self):
        if not self.x_d > 0:
            raise DomainError(
                f"Checkpoint must lie ahead of the vehicle, got x_d={self.x_d}.")


def desired_yaw_rate(delta_d: float, u: float, l: float, k_usd: float,
                     mu_y: float = 1.0, g: float = GRAVITY) -> float:
    """
    Yaw rate of a linear bicycle model with understeer coefficient
    `k_usd`, capped at the friction limit mu_y g / u.

    Parameters
    ----------
    * `delta_d` [float]:
        Driver steering angle in rad.

    * `u` [float]:
        Longitudinal velocity in m/s.

    * `l` [float]:
        Wheelbase in m.

    * `k_usd` [float]:
        Desired understeer coefficient.

    * `mu_y` [float, default=1.0]:
        Lateral friction coefficient.

    * `g` [float, default=9.81]

    Returns
    -------
    * `r_d` [float]:
        sign(delta_d) * min(|r_b|, r_max) in rad/s.
    """
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    r_b = u * delta_d / (l + k_usd * u ** 2)
    r_max = mu_y * g / u
    return float(np.sign(delta_d) * min(abs(r_b), r_max))


def desired_state_general(u: float, r_d: float, r_eff: float) -> np.ndarray:
    """[0, r_d, 0, 0, u/r_eff, u/r_eff, u/r_eff, u/r_eff]"""
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    return np.array([0.0, r_d, 0.0, 0.0] + [u / r_eff] * 4)


def checkpoint_steering(cp: Checkpoint, v_y: float, u: float,
                        delta_max: Optional[float] = None):
    """
    Heading towards a checkpoint and the steering angle that holds it.

    Parameters
    ----------
    * `cp` [Checkpoint]:
        Target in the vehicle frame.

    * `v_y` [float]:
        Lateral velocity in m/s.

    * `u` [float]:
        Longitudinal velocity in m/s.

    * `delta_max` [float, optional]:
        Steering limit the angle is clamped to.

    Returns
    -------
    * `psi_d` [float]:
        atan(y_d / x_d).

    * `delta_d` [float]:
        psi_d + v_y / u, clamped to [-delta_max, delta_max].
    """
    if not cp.x_d > 0:
        raise DomainError(f"x_d must be positive, got {cp.x_d}.")
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    psi_d = math.atan(cp.y_d / cp.x_d)
    delta_d = psi_d + v_y / u
    if delta_max is not None:
        delta_d = min(max(delta_d, -delta_max), delta_max)
    return psi_d, delta_d


def desired_state_vhs(y_d: float, r_d: float) -> np.ndarray:
    """[y_d, 0, r_d, 0, 0]"""
    return np.array([y_d, 0.0, r_d, 0.0, 0.0])


class CheckpointSchedule:
    """
    Ordered world-frame checkpoints of an overtaking maneuver.

    A checkpoint stays active until the vehicle's world x exceeds its x,
    then the next one takes over. Past the last checkpoint the vehicle
    keeps its lateral coordinate with a target `lookahead` metres ahead.

    Parameters
    ----------
    * `points` [sequence of (x, y)]:
        World coordinates in m, x strictly increasing.

    * `lookahead` [float, default=100.0]:
        Distance of the virtual target once all checkpoints are passed.

    * `min_distance` [float, default=20.0]:
        Lower bound on the along-track distance used for the heading, so
        the steering does not blow up as a checkpoint is approached.
    """

    def __init__(self, points: Sequence, lookahead=100.0, min_distance=20.0):
        points = [tuple(float(c) for c in point) for point in points]
        if not points:
            raise ConfigurationError("At least one checkpoint is required.")
        if any(len(point) != 2 for point in points):
            raise ConfigurationError("Checkpoints must be (x, y) pairs.")
        xs = [point[0] for point in points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigurationError(
                f"Checkpoint x coordinates must increase, got {xs}.")
        if not (lookahead > 0 and min_distance > 0):
            raise ConfigurationError("lookahead and min_distance must be positive.")
        self.points = points
        self.lookahead = lookahead
        self.min_distance = min_distance

    def active_index(self, x_world: float) -> int:
        """Index of the active checkpoint, `len(points)` once all are
        passed."""
        for i, (x, _) in enumerate(self.points):
            if not x_world > x:
                return i
        return len(self.points)

    def target(self, x_world: float):
        """World (x, y) the vehicle is steering towards."""
        index = self.active_index(x_world)
        if index == len(self.points):
            return x_world + self.lookahead, self.points[-1][1]
        return self.points[index]

    def lateral_target(self, x_world: float) -> float:
        return self.target(x_world)[1]

    def local_checkpoint(self, x_world: float, y_world: float,
                         psi: float) -> Checkpoint:
        """Active target expressed in the vehicle frame."""
        x_t, y_t = self.target(x_world)
        dx, dy = x_t - x_world, y_t - y_world
        cos, sin = math.cos(psi), math.sin(psi)
        x_local = cos * dx + sin * dy
        y_local = -sin * dx + cos * dy
        return Checkpoint(max(x_local, self.min_distance), y_local)
