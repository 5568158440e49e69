"""Parameter sets of the two vehicle models and their YAML files.

The defaults of `GeneralEvParams` describe a mid-size electric passenger
car, the defaults of `VhsParams` the Dallara AV-21 racing chassis. Values
that were not measured on either vehicle are marked as estimates in
`presets/*.yaml` and can be overridden like any other key.
"""
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..tires import TireParams, effective_radius
from ..utils.config import (
    ConfigMixin, apply_overrides, preset_path, read_yaml, write_yaml)

GRAVITY = 9.81

LOAD_SPLITS = ("axle", "even")


class ModelKind(str, Enum):
    GENERAL_EV = "general_ev"
    VHS = "vhs"

    @classmethod
    def parse(cls, value):
        try:
            return cls(getattr(value, "value", value))
        except ValueError:
            raise ConfigurationError(
                "Unknown model kind \"{}\", expected one of {}.".format(
                    value, [kind.value for kind in cls]))


def axle_masses(m: float, l_f: float, l_r: float) -> Tuple[float, float]:
    """Static front and rear axle masses, m l_r / l and m l_f / l."""
    wheelbase = l_f + l_r
    if not wheelbase > 0:
        raise ConfigurationError("l_f + l_r must be positive.")
    return m * l_r / wheelbase, m * l_f / wheelbase


@dataclass(frozen=True)
class ActuatorConfig(ConfigMixin):
    """
    Which of the eight control-delta channels the controller may use.

    Parameters
    ----------
    * `t_q` [tuple of 4 ints]:
        1 where the wheel's drive/brake torque can be changed, wheels in
        the order FL, FR, RL, RR.

    * `t_delta` [tuple of 4 ints]:
        1 where the wheel's steering angle can be changed.
    """
    t_q: Tuple[int, int, int, int] = (1, 1, 1, 1)
    t_delta: Tuple[int, int, int, int] = (0, 0, 0, 0)

    def __post_init__(self):
        for name in ("t_q", "t_delta"):
            flags = tuple(int(flag) for flag in getattr(self, name))
            if len(flags) != 4 or any(flag not in (0, 1) for flag in flags):
                raise ConfigurationError(
                    f"{name} must hold four flags in {{0, 1}}, got "
                    f"{getattr(self, name)}.")
            object.__setattr__(self, name, flags)

    @classmethod
    def torque_vectoring(cls):
        return cls((1, 1, 1, 1), (0, 0, 0, 0))

    @classmethod
    def vhs(cls):
        """Front-wheel steering and rear-wheel drive."""
        return cls((0, 0, 1, 1), (1, 1, 0, 0))

    @classmethod
    def integrated(cls):
        return cls((1, 1, 1, 1), (1, 1, 1, 1))

    @classmethod
    def from_name(cls, name):
        presets = {
            "torque_vectoring": cls.torque_vectoring,
            "vhs": cls.vhs,
            "integrated": cls.integrated,
        }
        if isinstance(name, dict):
            return cls.from_dict(name, section="actuators")
        if isinstance(name, cls):
            return name
        if name not in presets:
            raise ConfigurationError(
                f"Unknown actuator preset \"{name}\", expected one of "
                f"{sorted(presets)} or a mapping with t_q and t_delta.")
        return presets[name]()

    @property
    def mask(self) -> np.ndarray:
        """Interleaved channel mask [t_q1, t_d1, ..., t_q4, t_d4]."""
        return np.ravel(np.column_stack([self.t_q, self.t_delta])).astype(float)

    @property
    def matrix(self) -> np.ndarray:
        """Block-diagonal reconfiguration matrix T_w."""
        return np.diag(self.mask)

    @property
    def enabled(self) -> np.ndarray:
        """Indices of the enabled channels."""
        return np.flatnonzero(self.mask)


class _VehicleParams(ConfigMixin):
    """Checks and derived quantities shared by both parameter sets."""

    _nested = {"tire": TireParams}
    model_kind: ModelKind

    @property
    def l(self) -> float:
        return self.l_f + self.l_r

    @property
    def track(self) -> float:
        """Mean track width T."""
        return 0.5 * (self.t_f + self.t_r)

    def _check_positive(self, names):
        for name in names:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigurationError(
                    f"{type(self).__name__}.{name} must be positive, got {value}.")

    def _check_common(self):
        if isinstance(self.tire, dict):
            object.__setattr__(self, "tire",
                               TireParams.from_dict(self.tire, section="tire"))
        if not isinstance(self.tire, TireParams):
            raise ConfigurationError("tire must be a TireParams instance.")
        if not self.q_min < 0 < self.q_max:
            raise ConfigurationError(
                f"Torque limits must satisfy q_min < 0 < q_max, got "
                f"({self.q_min}, {self.q_max}).")
        if self.static_load_split not in LOAD_SPLITS:
            raise ConfigurationError(
                f"static_load_split must be one of {LOAD_SPLITS}, got "
                f"\"{self.static_load_split}\".")
        if (self.r_stat is None) != (self.r_w is None):
            raise ConfigurationError("r_stat and r_w must be given together.")
        if self.r_stat is not None:
            r_eff = effective_radius(self.r_stat, self.r_w)
            if abs(r_eff - self.r_eff) > 0.005:
                warnings.warn(
                    "r_eff={} does not match the effective radius {:.4f} of "
                    "r_stat={} and r_w={}.".format(
                        self.r_eff, r_eff, self.r_stat, self.r_w))

    @classmethod
    def from_yaml(cls, yml):
        """Build the parameter set from a vehicle file with sections
        `vehicle:` and `tire:`."""
        return load_vehicle(yml, expected=cls)

    def to_yaml(self, path):
        save_vehicle(self, path)


@dataclass(frozen=True)
class GeneralEvParams(_VehicleParams):
    """
    Parameters of the eight-state general electric vehicle model.

    Masses in kg, lengths in m, inertias in kg m^2, torques in N m, angles
    in rad. `m` defaults to `m_s + m_u` and `h_R` (roll-center height) to
    `h_cg - h_s`.
    """
    m_s: float = 1590.0
    m_u: float = 270.0
    m: Optional[float] = None
    l_f: float = 1.18
    l_r: float = 1.77
    t_f: float = 1.575
    t_r: float = 1.575
    h_s: float = 0.57
    h_u: float = 0.2
    h_cg: float = 0.72
    h_R: Optional[float] = None
    I_xx: float = 894.4
    I_zz: float = 2687.1
    k_phi: float = 189506.0
    c_phi: float = 6364.0
    r_eff: float = 0.393
    I_w: float = 1.1
    tire: TireParams = field(
        default_factory=lambda: TireParams(c_alpha=47275.0, c_sigma=80000.0))
    q_max: float = 1600.0
    q_min: float = -1600.0
    delta_max: float = 1.0
    k_usd: float = 0.4
    ri_c: float = 0.7
    alpha_r_max: float = math.radians(6.0)
    lambda_max: float = 0.1
    static_load_split: str = "axle"
    r_stat: Optional[float] = None
    r_w: Optional[float] = None

    model_kind = ModelKind.GENERAL_EV

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", self.m_s + self.m_u)
        if self.h_R is None:
            object.__setattr__(self, "h_R", self.h_cg - self.h_s)
        self._check_positive(
            ("m_s", "m_u", "m", "l_f", "l_r", "t_f", "t_r", "h_s", "h_u",
             "h_cg", "I_xx", "I_zz", "k_phi", "c_phi", "r_eff", "I_w",
             "delta_max", "alpha_r_max"))
        if not math.isclose(self.m, self.m_s + self.m_u, rel_tol=1e-9):
            raise ConfigurationError(
                f"m={self.m} must equal m_s + m_u = {self.m_s + self.m_u}.")
        if not 0 < self.ri_c <= 1:
            raise ConfigurationError(f"ri_c must lie in (0, 1], got {self.ri_c}.")
        if not 0 <= self.lambda_max < 1:
            raise ConfigurationError(
                f"lambda_max must lie in [0, 1), got {self.lambda_max}.")
        if self.k_usd < 0:
            raise ConfigurationError("k_usd must be non-negative.")
        self._check_common()


@dataclass(frozen=True)
class VhsParams(_VehicleParams):
    """
    Parameters of the five-state very-high-speed racing model.

    `m_f` is the front axle mass, `k_s` and `b_s` the suspension spring
    and damper, `l_s` their lateral lever arm and `phi_r` the road banking
    angle (positive lowers the left side of the road, which loads the left
    wheels and pulls the car towards +y).
    """
    m: float = 803.182
    m_s: float = 672.2
    m_f: float = 355.45
    l_f: float = 1.6566
    l_r: float = 1.3152
    I_xx: float = 200.0
    I_zz: float = 1200.0
    h_s: float = 0.1
    k_s: float = 10000.0
    b_s: float = 1000.0
    l_s: float = 0.6
    t_f: float = 1.581
    t_r: float = 1.581
    r_eff: float = 0.29
    tire: TireParams = field(
        default_factory=lambda: TireParams(c_alpha=8000.0, c_sigma=10000.0))
    delta_max: float = 0.1
    phi_r: float = 0.0
    q_max: float = 1000.0
    q_min: float = -1000.0
    k_usd: float = 0.4
    alpha_r_max: float = math.radians(6.0)
    static_load_split: str = "axle"
    r_stat: Optional[float] = None
    r_w: Optional[float] = None

    model_kind = ModelKind.VHS

    def __post_init__(self):
        self._check_positive(
            ("m", "m_s", "m_f", "l_f", "l_r", "I_xx", "I_zz", "h_s", "k_s",
             "b_s", "l_s", "t_f", "t_r", "r_eff", "delta_max", "alpha_r_max"))
        if self.m_s > self.m:
            raise ConfigurationError("m_s must not exceed m.")
        if not -0.5 <= self.phi_r <= 0.5:
            raise ConfigurationError(
                f"phi_r must lie in [-0.5, 0.5], got {self.phi_r}.")
        if self.k_usd < 0:
            raise ConfigurationError("k_usd must be non-negative.")
        self._check_common()
        m_f, _ = axle_masses(self.m, self.l_f, self.l_r)
        if abs(m_f - self.m_f) > 0.05:
            warnings.warn(
                "m_f={} differs from the static front axle mass m l_r / l = "
                "{:.2f}.".format(self.m_f, m_f))
        if 0.5 * self.k_s * self.l_s ** 2 <= GRAVITY * self.h_s * self.m:
            warnings.warn(
                "The roll stiffness 0.5 k_s l_s^2 does not exceed g h_s m; "
                "the roll mode of the VHS body model is unstable.")


PARAMS_BY_KIND = {
    ModelKind.GENERAL_EV: GeneralEvParams,
    ModelKind.VHS: VhsParams,
}


def load_vehicle(path, expected=None, overrides=None):
    """
    Read a vehicle file.

    Parameters
    ----------
    * `path` [str or Path]:
        File path or name of a bundled preset, e.g. `"general_ev"`.

    * `expected` [type, optional]:
        Parameter class the file must describe.

    * `overrides` [list of str, optional]:
        `section.key=value` strings applied on top of the file, e.g.
        `"vehicle.l_s=0.8"` or `"tire.mu_y=0.9"`.

    Returns
    -------
    * `params` [GeneralEvParams or VhsParams]
    """
    path = preset_path(path)
    data = read_yaml(path)
    unknown = sorted(set(data) - {"model_kind", "vehicle", "tire"})
    if unknown:
        raise ConfigurationError(
            f"Unknown section(s) {unknown} in vehicle file \"{path}\".")
    if overrides:
        data = apply_overrides(data, overrides,
                               sections=("model_kind", "vehicle", "tire"))
    kind = ModelKind.parse(data.get("model_kind"))
    cls = PARAMS_BY_KIND[kind]
    if expected is not None and cls is not expected:
        raise ConfigurationError(
            f"\"{path}\" describes a {kind.value} vehicle, expected "
            f"{expected.__name__}.")
    vehicle = dict(data.get("vehicle") or {})
    if "tire" in vehicle:
        raise ConfigurationError(
            "Tire parameters belong in the top-level \"tire\" section.")
    vehicle["tire"] = TireParams.from_dict(data.get("tire"), section="tire")
    return cls.from_dict(vehicle, section="vehicle")


def save_vehicle(params, path):
    """Write `params` in the layout `load_vehicle` reads."""
    vehicle = params.to_dict()
    tire = vehicle.pop("tire")
    write_yaml({
        "model_kind": params.model_kind.value,
        "vehicle": vehicle,
        "tire": tire,
    }, path)
