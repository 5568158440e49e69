"""Lateral tire force models and their linearization.

Two force laws are available, selected by `TireParams.model_kind`:

* `"dugoff"`: the Dugoff combined-slip model

      F_y = C_a tan(a) / (1 + s) * f(lam)
      lam = mu_y F_z (1 + s) / (2 sqrt((C_s s)^2 + (C_a tan(a))^2))
      f(lam) = (2 - lam) lam   if lam < 1
               1               otherwise

* `"pacejka"`: the four-coefficient magic formula with the peak pinned to
  the friction limit, D = mu_y F_z,

      F_y = D sin(C atan(B a - E (B a - atan(B a))))

Both laws are odd in the slip angle and never exceed mu_y F_z. The
controller replaces them by the affine map

      f_y(a) = f_y_bar + c_alpha_tilde (a - alpha_bar)

around the current operating point (see `linearize_tire`).
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError, DomainError
from ..utils.config import ConfigMixin

TIRE_MODELS = ("dugoff", "pacejka")


@dataclass(frozen=True)
class PacejkaCoeffs(ConfigMixin):
    """Shape factors of the magic formula. The peak factor D is not stored,
    it is always mu_y * f_z."""
    B: float = 10.0
    C: float = 1.9
    E: float = 0.97

    def __post_init__(self):
        if not (self.B > 0 and self.C > 0):
            raise ConfigurationError("Pacejka B and C must be positive.")
        if self.E > 1:
            raise ConfigurationError("Pacejka E must not exceed 1.")


@dataclass(frozen=True)
class TireParams(ConfigMixin):
    """
    Parameters of one tire, shared by all four wheels.

    Parameters
    ----------
    * `c_alpha` [float]:
        Cornering stiffness in N/rad.

    * `c_sigma` [float]:
        Longitudinal stiffness in N.

    * `mu_x` [float, default=1.0]:
        Longitudinal friction coefficient, in (0, 2].

    * `mu_y` [float, default=1.0]:
        Lateral friction coefficient, in (0, 2].

    * `model_kind` [str, default="dugoff"]:
        Force law, "dugoff" or "pacejka".

    * `pacejka_coeffs` [PacejkaCoeffs, optional]:
        Required when `model_kind="pacejka"`, forbidden otherwise.
    """
    c_alpha: float
    c_sigma: float
    mu_x: float = 1.0
    mu_y: float = 1.0
    model_kind: str = "dugoff"
    pacejka_coeffs: Optional[PacejkaCoeffs] = None

    _nested = {"pacejka_coeffs": PacejkaCoeffs}

    def __post_init__(self):
        if not self.c_alpha > 0:
            raise ConfigurationError(
                f"c_alpha must be positive, got {self.c_alpha}.")
        if not self.c_sigma > 0:
            raise ConfigurationError(
                f"c_sigma must be positive, got {self.c_sigma}.")
        for name in ("mu_x", "mu_y"):
            value = getattr(self, name)
            if not 0 < value <= 2:
                raise ConfigurationError(f"{name} must lie in (0, 2], got {value}.")
        if self.model_kind not in TIRE_MODELS:
            raise ConfigurationError(
                f"Unknown tire model \"{self.model_kind}\", expected one of "
                f"{TIRE_MODELS}.")
        if (self.model_kind == "pacejka") != (self.pacejka_coeffs is not None):
            raise ConfigurationError(
                "pacejka_coeffs must be given exactly when model_kind is "
                "\"pacejka\".")


@dataclass(frozen=True)
class TireOperatingPoint:
    """Slip angle, normal load and slip ratio a tire is evaluated at."""
    alpha_bar: float
    f_z: float
    sigma_x: float = 0.0

    def __post_init__(self):
        if self.f_z < 0:
            raise DomainError(f"Normal load must be non-negative, got {self.f_z}.")
        if not abs(self.alpha_bar) < np.pi / 2:
            raise DomainError(
                f"Slip angle must lie in (-pi/2, pi/2), got {self.alpha_bar}.")
        if self.sigma_x <= -1:
            raise DomainError(f"Slip ratio must exceed -1, got {self.sigma_x}.")


@dataclass(frozen=True)
class TireLinearization:
    """Affine lateral force model f_y_bar + c_alpha_tilde * (a - alpha_bar)."""
    f_y_bar: float
    c_alpha_tilde: float
    alpha_bar: float

    def force(self, alpha):
        return self.f_y_bar + self.c_alpha_tilde * (alpha - self.alpha_bar)


def wheel_lever_arms(l_f: float, l_r: float) -> np.ndarray:
    """Longitudinal position a_i of each wheel (FL, FR, RL, RR)."""
    return np.array([l_f, l_f, -l_r, -l_r])


def slip_angle(wheel_index: int, steering: float, v: float, r: float,
               u: float, l_f: float, l_r: float) -> float:
    """
    Side-slip angle of one wheel, delta_i - (v + a_i r) / u.

    Parameters
    ----------
    * `wheel_index` [int]:
        1 (front left), 2 (front right), 3 (rear left) or 4 (rear right).

    * `steering` [float]:
        Steering angle of the wheel in rad.

    * `v`, `r`, `u` [float]:
        Lateral velocity (m/s), yaw rate (rad/s) and longitudinal
        velocity (m/s).

    * `l_f`, `l_r` [float]:
        Distances from the center of gravity to the axles in m.
    """
    if wheel_index not in (1, 2, 3, 4):
        raise ValueError(f"wheel_index must be 1..4, got {wheel_index}.")
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    a_i = wheel_lever_arms(l_f, l_r)[wheel_index - 1]
    return steering - (v + a_i * r) / u


def slip_angles(steering, v: float, r: float, u: float,
                l_f: float, l_r: float) -> np.ndarray:
    """Vectorised `slip_angle` for all four wheels."""
    if not u > 0:
        raise DomainError(f"Longitudinal velocity must be positive, got {u}.")
    steering = np.asarray(steering, dtype=float)
    return steering - (v + wheel_lever_arms(l_f, l_r) * r) / u


def _dugoff(alpha, f_z, sigma_x, tire):
    """Dugoff force and its derivative with respect to alpha."""
    tan_alpha = np.tan(alpha)
    lateral = tire.c_alpha * tan_alpha
    d_lateral = tire.c_alpha / np.cos(alpha) ** 2
    resultant = np.hypot(tire.c_sigma * sigma_x, lateral)
    capacity = tire.mu_y * f_z * (1 + sigma_x)
    scale = 1.0 / (1 + sigma_x)

    if capacity == 0:
        lam = 0.0
    elif resultant == 0:
        lam = np.inf
    else:
        lam = capacity / (2 * resultant)

    if lam > 1:
        return lateral * scale, d_lateral * scale

    # saturated branch, also taken at lam == 1
    f = (2 - lam) * lam
    if resultant == 0:
        d_lam = 0.0
    else:
        d_lam = -lam * lateral * d_lateral / resultant ** 2
    force = lateral * scale * f
    slope = scale * (d_lateral * f + lateral * (2 - 2 * lam) * d_lam)
    return force, slope


def _pacejka(alpha, f_z, tire):
    """Magic formula force and its derivative with respect to alpha."""
    coeffs = tire.pacejka_coeffs
    if coeffs is None:
        raise ConfigurationError(
            "Pacejka force requested but the tire has no pacejka_coeffs.")
    B, C, E = coeffs.B, coeffs.C, coeffs.E
    D = tire.mu_y * f_z
    b_alpha = B * alpha
    phi = b_alpha - E * (b_alpha - np.arctan(b_alpha))
    d_phi = B - E * (B - B / (1 + b_alpha ** 2))
    inner = C * np.arctan(phi)
    force = D * np.sin(inner)
    slope = D * np.cos(inner) * C / (1 + phi ** 2) * d_phi
    return force, slope


def dugoff_lateral_force(op: TireOperatingPoint, params: TireParams) -> float:
    """
    Lateral force of the Dugoff model at an operating point.

    Parameters
    ----------
    * `op` [TireOperatingPoint]:
        Slip angle, normal load and slip ratio.

    * `params` [TireParams]:
        Tire parameters; `model_kind` is ignored.

    Returns
    -------
    * `f_y` [float]:
        Lateral force in N, bounded by mu_y * f_z in magnitude.
    """
    if op.f_z < 0:
        raise DomainError(f"Normal load must be non-negative, got {op.f_z}.")
    return float(_dugoff(op.alpha_bar, op.f_z, op.sigma_x, params)[0])


def pacejka_lateral_force(op: TireOperatingPoint, params: TireParams) -> float:
    """Lateral force of the magic formula; pure slip, so `sigma_x` is
    ignored."""
    return float(_pacejka(op.alpha_bar, op.f_z, params)[0])


def _force_and_slope(op, params):
    if params.model_kind == "pacejka":
        return _pacejka(op.alpha_bar, op.f_z, params)
    return _dugoff(op.alpha_bar, op.f_z, op.sigma_x, params)


def lateral_force(op: TireOperatingPoint, params: TireParams) -> float:
    """Lateral force of the model selected by `params.model_kind`."""
    return float(_force_and_slope(op, params)[0])


def linearize_tire(op: TireOperatingPoint, params: TireParams,
                   method: str = "analytic", step: float = 1e-6
                   ) -> TireLinearization:
    """
    Linearize the lateral force about an operating point.

    Parameters
    ----------
    * `op` [TireOperatingPoint]:
        Operating point; its slip angle becomes `alpha_bar`.

    * `params` [TireParams]:
        Tire parameters, `model_kind` selects the force law.

    * `method` [str, default="analytic"]:
        "analytic" uses the closed-form derivative. "central" uses a
        central finite difference with half-width `step`.

    * `step` [float, default=1e-6]:
        Finite-difference step in rad, only used by "central".

    Returns
    -------
    * `linearization` [TireLinearization]:
        Force, local cornering coefficient and slip angle.
    """
    force, slope = _force_and_slope(op, params)
    if method == "central":
        upper = TireOperatingPoint(op.alpha_bar + step, op.f_z, op.sigma_x)
        lower = TireOperatingPoint(op.alpha_bar - step, op.f_z, op.sigma_x)
        slope = (lateral_force(upper, params)
                 - lateral_force(lower, params)) / (2 * step)
    elif method != "analytic":
        raise ValueError(
            f"method must be \"analytic\" or \"central\", got \"{method}\".")
    return TireLinearization(
        f_y_bar=float(force),
        c_alpha_tilde=float(slope),
        alpha_bar=float(op.alpha_bar),
    )


def peak_longitudinal_force(f_z0: float, f_y0: float, params: TireParams,
                            rtol: float = 1e-9) -> float:
    """
    Longitudinal force capacity left by the friction ellipse,
    mu_x f_z0 sqrt(1 - (f_y0 / (mu_y f_z0))^2).

    Parameters
    ----------
    * `f_z0`, `f_y0` [float]:
        Normal load and lateral force at the start of the horizon, in N.

    * `params` [TireParams]:
        Friction coefficients.

    * `rtol` [float, default=1e-9]:
        Relative slack on the ellipse check for round-off in `f_y0`.
    """
    if not f_z0 > 0:
        raise DomainError(f"Normal load must be positive, got {f_z0}.")
    usage = f_y0 / (params.mu_y * f_z0)
    if abs(usage) > 1 + rtol:
        raise DomainError(
            f"Lateral force {f_y0} lies outside the friction ellipse of a "
            f"tire loaded with {f_z0} N.")
    usage = min(abs(usage), 1.0)
    return float(params.mu_x * f_z0 * np.sqrt(1 - usage ** 2))


def effective_radius(r_stat: float, r_w: float) -> float:
    """
    Effective rolling radius from the static (loaded) and unloaded radius,
    sin(t) r_w / t with t = acos(r_stat / r_w).

    Parameters
    ----------
    * `r_stat` [float]:
        Static loaded radius in m, 0 < r_stat <= r_w.

    * `r_w` [float]:
        Unloaded wheel radius in m.
    """
    if not (r_stat > 0 and r_w > 0):
        raise DomainError("Tire radii must be positive.")
    if r_stat > r_w:
        raise DomainError(
            f"Static radius {r_stat} exceeds the wheel radius {r_w}.")
    theta = np.arccos(r_stat / r_w)
    # np.sinc(x) = sin(pi x) / (pi x), which is 1 at x = 0
    return float(r_w * np.sinc(theta / np.pi))


def linearize_wheels(alpha, f_z, params: TireParams,
                     sigma_x=0.0) -> Tuple[TireLinearization, ...]:
    """Linearize all four tires at per-wheel slip angles and loads.
    Negative loads (wheel lift) are floored at zero."""
    return tuple(
        linearize_tire(
            TireOperatingPoint(float(a), max(float(fz), 0.0), sigma_x), params)
        for a, fz in zip(alpha, f_z)
    )


def lateral_forces(alpha, f_z, params: TireParams, sigma_x=0.0) -> np.ndarray:
    """Nonlinear lateral force of all four tires."""
    return np.array([
        _force_and_slope(
            TireOperatingPoint(float(a), max(float(fz), 0.0), sigma_x), params)[0]
        for a, fz in zip(alpha, f_z)
    ])
