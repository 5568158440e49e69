"""Closed-loop scenario definitions and the scenario file format.

A scenario file has two sections:

    scenario:
      name: vhs_overtake_flat
      model_kind: vhs
      vehicle: dallara_av21       # preset name or path, relative to this file
      u_kph: 180                  # or u in m/s
      steps: 140
      checkpoints: [[150, -3], [350, 0]]
    mpc:
      horizon: 50
      sample_time: 0.05
      solver:
        max_iter: 4000

Missing `mpc` keys take the defaults of `MpcConfig.default` for the model
kind.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..controller.mpc import MpcConfig
from ..exceptions import ConfigurationError
from ..utils.config import (ConfigMixin, apply_overrides, preset_path,
                            read_yaml, relative_to, write_yaml)
from ..vehicle.models import N_STATES
from ..vehicle.params import ActuatorConfig, ModelKind, load_vehicle
from .plant import TIRE_MODES

SCENARIO_SECTIONS = ("scenario", "mpc")
OVERRIDE_SECTIONS = ("scenario", "mpc", "vehicle", "tire")


@dataclass(frozen=True)
class Scenario(ConfigMixin):
    """
    One closed-loop run.

    Parameters
    ----------
    * `name` [str]

    * `model_kind` [str]:
        "general_ev" or "vhs".

    * `vehicle` [str]:
        Vehicle file or bundled preset name.

    * `u` [float]:
        Constant longitudinal velocity in m/s. Files may give `u_kph`
        instead.

    * `steps` [int]:
        Number of closed-loop samples M.

    * `sample_time` [float, optional]:
        Must match the controller's sample time when given.

    * `x0` [tuple, optional]:
        Initial plant state, zeros by default.

    * `delta_d` [float, default=0.0]:
        Driver steering on the front wheels, in rad.

    * `torques` [tuple of 4, default=(0, 0, 0, 0)]:
        Driver torques FL, FR, RL, RR in N m.

    * `checkpoints` [tuple of (x, y), optional]:
        World checkpoints of the racing model.

    * `lookahead`, `min_distance` [float]:
        See `CheckpointSchedule`.

    * `phi_r` [float, default=0.0]:
        Banking angle in rad. Files may give `phi_r_deg` instead.

    * `prediction_error_gain` [float, default=1.0]:
        Gain on the state the controller sees, in (0, 2].

    * `seed` [int, default=0]

    * `actuators` [str or dict, optional]:
        Actuator preset name or {t_q, t_delta}; defaults to torque
        vectoring for the general vehicle and the racing layout otherwise.

    * `tire_mode` [str, default="nonlinear"]:
        Tire evaluation of the plant, "nonlinear" or "linearized".

    * `plant_substeps` [int, default=10]:
        Runge-Kutta steps per sample.
    """
    name: str = "scenario"
    model_kind: str = "general_ev"
    vehicle: str = "general_ev"
    u: float = 80 / 3.6
    steps: int = 250
    sample_time: Optional[float] = None
    x0: Optional[Tuple[float, ...]] = None
    delta_d: float = 0.0
    torques: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    checkpoints: Optional[Tuple[Tuple[float, float], ...]] = None
    lookahead: float = 100.0
    min_distance: float = 20.0
    phi_r: float = 0.0
    prediction_error_gain: float = 1.0
    seed: int = 0
    actuators: Optional[Union[str, dict]] = None
    tire_mode: str = "nonlinear"
    plant_substeps: int = 10

    def __post_init__(self):
        kind = ModelKind.parse(self.model_kind)
        object.__setattr__(self, "model_kind", kind.value)
        if not self.u > 0:
            raise ConfigurationError(f"u must be positive, got {self.u}.")
        object.__setattr__(self, "u", float(self.u))
        if int(self.steps) < 1 or int(self.steps) != self.steps:
            raise ConfigurationError(f"steps must be a positive integer, got {self.steps}.")
        object.__setattr__(self, "steps", int(self.steps))
        if self.sample_time is not None and not self.sample_time > 0:
            raise ConfigurationError(
                f"sample_time must be positive, got {self.sample_time}.")
        if self.x0 is not None:
            x0 = tuple(float(v) for v in self.x0)
            if len(x0) != N_STATES[kind]:
                raise ConfigurationError(
                    f"x0 must have {N_STATES[kind]} entries for a {kind.value} "
                    f"model, got {len(x0)}.")
            object.__setattr__(self, "x0", x0)
        torques = tuple(float(v) for v in self.torques)
        if len(torques) != 4:
            raise ConfigurationError(f"torques must have 4 entries, got {len(torques)}.")
        object.__setattr__(self, "torques", torques)
        if self.checkpoints is not None:
            points = tuple(tuple(float(c) for c in point) for point in self.checkpoints)
            if not points or any(len(point) != 2 for point in points):
                raise ConfigurationError("checkpoints must be a list of (x, y) pairs.")
            object.__setattr__(self, "checkpoints", points)
        if not 0 < self.prediction_error_gain <= 2:
            raise ConfigurationError(
                "prediction_error_gain must lie in (0, 2], got "
                f"{self.prediction_error_gain}.")
        if self.tire_mode not in TIRE_MODES:
            raise ConfigurationError(
                f"tire_mode must be one of {TIRE_MODES}, got \"{self.tire_mode}\".")
        if int(self.plant_substeps) < 1:
            raise ConfigurationError(
                f"plant_substeps must be at least 1, got {self.plant_substeps}.")
        object.__setattr__(self, "plant_substeps", int(self.plant_substeps))
        object.__setattr__(self, "seed", int(self.seed))
        if self.actuators is not None:
            ActuatorConfig.from_name(self.actuators)

    @classmethod
    def from_dict(cls, data, section=None):
        data = dict(data or {})
        section = section or "scenario"
        for alias, key, factor in (("u_kph", "u", 1 / 3.6),
                                   ("phi_r_deg", "phi_r", math.pi / 180)):
            if alias in data:
                if key in data:
                    raise ConfigurationError(
                        f"Give either {key} or {alias} in section \"{section}\".")
                try:
                    data[key] = float(data.pop(alias)) * factor
                except (TypeError, ValueError):
                    raise ConfigurationError(
                        f"{alias} must be a number in section \"{section}\".")
        return super().from_dict(data, section)

    @property
    def kind(self) -> ModelKind:
        return ModelKind(self.model_kind)

    @property
    def initial_state(self) -> np.ndarray:
        if self.x0 is None:
            return np.zeros(N_STATES[self.kind])
        return np.array(self.x0)

    @property
    def driver_command(self) -> np.ndarray:
        """W = [Q1, d, Q2, d, Q3, 0, Q4, 0] with the driver steering on the
        front wheels."""
        command = np.zeros(8)
        command[0::2] = self.torques
        command[1] = command[3] = self.delta_d
        return command

    def actuator_config(self) -> ActuatorConfig:
        if self.actuators is not None:
            return ActuatorConfig.from_name(self.actuators)
        if self.kind == ModelKind.VHS:
            return ActuatorConfig.vhs()
        return ActuatorConfig.torque_vectoring()

    @classmethod
    def from_yaml(cls, yml):
        """Scenario section of a scenario file."""
        return load_scenario(yml)[0]

    def to_yaml(self, path, config: Optional[MpcConfig] = None):
        save_scenario(self, path, config)


def _merge(base, update):
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def mpc_config_for(kind, data=None) -> MpcConfig:
    """Controller tuning of a scenario: the defaults for `kind` updated by
    the keys in `data`."""
    kind = ModelKind.parse(kind)
    data = dict(data or {})
    given = data.pop("model_kind", kind.value)
    if ModelKind.parse(given) != kind:
        raise ConfigurationError(
            f"mpc.model_kind \"{given}\" does not match the scenario's "
            f"\"{kind.value}\".")
    merged = _merge(MpcConfig.default(kind).to_dict(), data)
    return MpcConfig.from_dict(merged, section="mpc")


def load_scenario(path, overrides=None):
    """
    Read a scenario file with its controller tuning and vehicle.

    Parameters
    ----------
    * `path` [str or Path]:
        Scenario file or bundled preset name.

    * `overrides` [list of str, optional]:
        `section.key=value` strings. The `scenario` and `mpc` sections
        change the scenario file, `vehicle` and `tire` the vehicle file.

    Returns
    -------
    * `scenario` [Scenario]
    * `config` [MpcConfig]
    * `params` [GeneralEvParams or VhsParams]
    """
    path = preset_path(path)
    data = read_yaml(path)
    unknown = sorted(set(data) - set(SCENARIO_SECTIONS))
    if unknown:
        raise ConfigurationError(
            f"Unknown section(s) {unknown} in scenario file \"{path}\".")
    overrides = list(overrides or [])
    for override in overrides:
        section = override.split("=", 1)[0].split(".", 1)[0].strip()
        if section not in OVERRIDE_SECTIONS:
            raise ConfigurationError(
                f"Unknown configuration section \"{section}\" in override "
                f"\"{override}\".")
    own = [o for o in overrides if o.split(".", 1)[0].strip() in SCENARIO_SECTIONS]
    vehicle_overrides = [o for o in overrides if o not in own]
    data = apply_overrides(data, own, sections=SCENARIO_SECTIONS)

    scenario = Scenario.from_dict(data.get("scenario"), section="scenario")
    config = mpc_config_for(scenario.kind, data.get("mpc"))
    if scenario.sample_time is not None and scenario.sample_time != config.sample_time:
        raise ConfigurationError(
            f"scenario.sample_time={scenario.sample_time} differs from "
            f"mpc.sample_time={config.sample_time}.")
    vehicle_path = relative_to(path, scenario.vehicle)
    params = load_vehicle(vehicle_path, overrides=vehicle_overrides)
    if params.model_kind != scenario.kind:
        raise ConfigurationError(
            f"Vehicle \"{scenario.vehicle}\" is a {params.model_kind.value} "
            f"model but the scenario is {scenario.kind.value}.")
    return scenario, config, params


def save_scenario(scenario: Scenario, path, config: Optional[MpcConfig] = None):
    """Write a scenario file that `load_scenario` reads back unchanged."""
    data = {"scenario": scenario.to_dict()}
    if config is not None:
        data["mpc"] = config.to_dict()
    write_yaml(data, path)
