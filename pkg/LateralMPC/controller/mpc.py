"""Receding-horizon controller.

Every call to `MpcController.step` linearizes the tires at the measured
state, assembles and discretizes the affine model, builds the references
and constraint rows, solves one quadratic program and returns the first
control delta. The linearization is held over the whole horizon, so each
step is a single QP.
"""
import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import OptimizeResult

from ..exceptions import ConfigurationError, DimensionError
from ..reference import (Checkpoint, checkpoint_steering, desired_state_general,
                         desired_state_vhs, desired_yaw_rate)
from ..solver import ADMMSolver, QpStatus, SolverSettings
from ..utils.config import ConfigMixin
from ..vehicle.models import N_INPUTS, N_STATES, assemble, operating_point
from ..vehicle.params import ActuatorConfig, ModelKind
from .cftoc import build_cftoc, build_sparse_cftoc, extract_inputs, predict_states
from .constraints import build_constraints, rollover_index
from .discretization import discretize

logger = logging.getLogger(__name__)

FORMULATIONS = ("condensed", "sparse")


@dataclass(frozen=True)
class MpcConfig(ConfigMixin):
    """
    Parameters
    ----------
    * `model_kind` [str]:
        "general_ev" or "vhs".

    * `horizon` [int]:
        Prediction horizon N in steps.

    * `sample_time` [float]:
        T_s in s.

    * `state_weights` [tuple]:
        Diagonal of Q, one entry per state.

    * `input_weights` [tuple of 8]:
        Diagonal of R over [dQ1, dd1, ..., dQ4, dd4].

    * `input_rate_weights` [tuple of 8, optional]:
        Diagonal penalty on consecutive input changes.

    * `slack_weight` [float, default=0.1]:
        Quadratic penalty sigma on the soft-constraint slack.

    * `slack_linear_weight` [float, default=1000.0]:
        Linear penalty on the slack, measured in half-widths of the soft
        rows. Large enough to beat the tracking cost, so the soft rows bind
        whenever they can be met.

    * `formulation` [str, default="condensed"]:
        "condensed" eliminates the states, "sparse" keeps them.

    * `solver` [SolverSettings]
    """
    model_kind: str = "general_ev"
    horizon: int = 10
    sample_time: float = 0.1
    state_weights: Tuple[float, ...] = (1.0, 100.0, 10.0, 10.0, 0.1, 0.1, 0.1, 0.1)
    input_weights: Tuple[float, ...] = (1e-4, 10.0) * 4
    input_rate_weights: Optional[Tuple[float, ...]] = None
    slack_weight: float = 0.1
    slack_linear_weight: float = 1000.0
    formulation: str = "condensed"
    solver: SolverSettings = field(default_factory=SolverSettings)

    _nested = {"solver": SolverSettings}

    def __post_init__(self):
        kind = ModelKind.parse(self.model_kind)
        object.__setattr__(self, "model_kind", kind.value)
        if isinstance(self.solver, dict):
            object.__setattr__(self, "solver", SolverSettings.from_dict(self.solver))
        if int(self.horizon) < 1 or int(self.horizon) != self.horizon:
            raise ConfigurationError(f"horizon must be a positive integer, got {self.horizon}.")
        object.__setattr__(self, "horizon", int(self.horizon))
        if not self.sample_time > 0:
            raise ConfigurationError(f"sample_time must be positive, got {self.sample_time}.")
        n_x = N_STATES[kind]
        for name, size in (("state_weights", n_x), ("input_weights", N_INPUTS),
                           ("input_rate_weights", N_INPUTS)):
            value = getattr(self, name)
            if value is None:
                continue
            value = tuple(float(v) for v in value)
            if len(value) != size:
                raise ConfigurationError(
                    f"{name} must have {size} entries for a {kind.value} model, "
                    f"got {len(value)}.")
            if any(v < 0 for v in value):
                raise ConfigurationError(f"{name} must be non-negative.")
            object.__setattr__(self, name, value)
        if self.slack_weight < 0 or self.slack_linear_weight < 0:
            raise ConfigurationError("Slack weights must be non-negative.")
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError(
                f"formulation must be one of {FORMULATIONS}, got \"{self.formulation}\".")

    @classmethod
    def default(cls, model_kind, **kwargs):
        """Default tuning of either model, overridable by keyword."""
        kind = ModelKind.parse(model_kind)
        if kind == ModelKind.VHS:
            defaults = dict(horizon=50, sample_time=0.05,
                            state_weights=(10.0, 1.0, 50.0, 20.0, 20.0))
        else:
            defaults = dict(horizon=10, sample_time=0.1,
                            state_weights=(1.0, 100.0, 10.0, 10.0) + (0.1,) * 4)
        defaults.update(kwargs)
        return cls(model_kind=kind.value, **defaults)


def _shift_stages(vector, blocks, horizon):
    """Advance consecutive stage-ordered blocks of `vector` by one stage in
    place, repeating the last stage. `blocks` holds the entries per stage
    of each block; entries after the last block are left alone."""
    start = 0
    for size in blocks:
        span = horizon * size
        if size:
            stages = vector[start:start + span].reshape(horizon, size)
            vector[start:start + span] = np.vstack([stages[1:], stages[-1:]]).ravel()
        start += span
    return vector


def create_step_result(**fields):
    """Initialize an `MpcStepResult` record."""
    res = OptimizeResult()
    for key, value in fields.items():
        res[key] = value
    return res


class MpcController(object):
    """
    Model predictive controller of one vehicle.

    Parameters
    ----------
    * `params` [GeneralEvParams or VhsParams]

    * `config` [MpcConfig]:
        Must describe the same model kind as `params`.

    * `speed` [float]:
        Constant longitudinal velocity u in m/s.

    * `actuators` [ActuatorConfig, optional]:
        Defaults to torque vectoring for the general vehicle and the racing
        layout for the racing model.

    * `phi_r` [float, optional]:
        Banking angle, defaults to `params.phi_r` for the racing model.

    * `measurement_gain` [float, default=1.0]:
        Gain applied to the measured state before it is used, modelling a
        prediction error.

    Attributes
    ----------
    * `solver` [ADMMSolver]:
        Solver owned by this controller.

    * `last_result` [OptimizeResult or None]:
        Record of the previous step, the warm start of the next one.
    """

    def __init__(self, params, config: MpcConfig, speed: float,
                 actuators: Optional[ActuatorConfig] = None, phi_r=None,
                 measurement_gain: float = 1.0):
        if ModelKind.parse(config.model_kind) != params.model_kind:
            raise ConfigurationError(
                f"MPC configured for \"{config.model_kind}\" but the vehicle is "
                f"\"{params.model_kind.value}\".")
        if not speed > 0:
            raise ConfigurationError(f"speed must be positive, got {speed}.")
        if not 0 < measurement_gain <= 2:
            raise ConfigurationError(
                f"measurement_gain must lie in (0, 2], got {measurement_gain}.")
        if actuators is None:
            actuators = (ActuatorConfig.vhs() if params.model_kind == ModelKind.VHS
                         else ActuatorConfig.torque_vectoring())
        self.params = params
        self.config = config
        self.speed = float(speed)
        self.actuators = actuators
        if params.model_kind == ModelKind.VHS:
            self.phi_r = params.phi_r if phi_r is None else float(phi_r)
        else:
            self.phi_r = 0.0 if phi_r is None else float(phi_r)
        self.measurement_gain = float(measurement_gain)
        self.enabled = actuators.enabled
        R = np.asarray(config.input_weights)
        if np.any(R[self.enabled] <= 0):
            raise ConfigurationError("input_weights must be positive on enabled actuators.")
        self.solver = ADMMSolver(config.solver)
        self.last_result = None

    @property
    def n_x(self):
        return N_STATES[self.params.model_kind]

    def reset(self):
        self.last_result = None

    def _references(self, x, delta_d, checkpoint, y_d):
        p, u = self.params, self.speed
        if p.model_kind == ModelKind.VHS:
            psi_d = None
            if checkpoint is not None:
                if not isinstance(checkpoint, Checkpoint):
                    checkpoint = Checkpoint(*checkpoint)
                psi_d, delta_d = checkpoint_steering(checkpoint, x[1], u, p.delta_max)
            delta_d = 0.0 if delta_d is None else delta_d
            r_d = desired_yaw_rate(delta_d, u, p.l, p.k_usd, p.tire.mu_y)
            return desired_state_vhs(y_d, r_d), delta_d, r_d, psi_d
        r_d = desired_yaw_rate(delta_d, u, p.l, p.k_usd, p.tire.mu_y)
        return desired_state_general(u, r_d, p.r_eff), delta_d, r_d, None

    def _previous_input(self, W0):
        """Last applied command expressed as a delta on `W0`, the value the
        rate weights tie U0 to. None before the first step."""
        previous = self.last_result
        if previous is None:
            return None
        return previous.command + previous.u_apply - W0

    def _warm_start(self, qp):
        previous = self.last_result
        if previous is None or previous.qp_solution is None:
            return None
        solution = previous.qp_solution
        if solution.status not in (QpStatus.SOLVED, QpStatus.MAX_ITER_REACHED):
            return None
        if solution.x.shape != (qp.n,) or solution.y.shape != (qp.m,):
            return None
        meta = qp.meta
        if previous.stage_rows != meta["stage_rows"]:
            return None
        horizon = meta["horizon"]
        x = solution.x.copy()
        blocks = [meta["n_u"]]
        if meta["formulation"] == "sparse":
            blocks.insert(0, meta["n_x"])
        _shift_stages(x, blocks, horizon)
        y = solution.y.copy()
        _shift_stages(y, meta["stage_rows"], horizon)
        return OptimizeResult(x=x, y=y)

    def step(self, measurement, command, delta_d=None, checkpoint=None,
             y_d=0.0):
        """
        Compute the control delta of one sample.

        Parameters
        ----------
        * `measurement` [array, shape=(n_x,)]:
            Measured plant state.

        * `command` [array, shape=(8,)]:
            Driver command W0 the delta is added to.

        * `delta_d` [float, optional]:
            Driver steering for the desired yaw rate. Defaults to the front
            left steering angle of `command` for the general vehicle.

        * `checkpoint` [Checkpoint or (x_d, y_d), optional]:
            Racing model only: target in the vehicle frame, overrides
            `delta_d`.

        * `y_d` [float, default=0.0]:
            Racing model only: desired lateral position.

        Returns
        -------
        * `res` [`OptimizeResult`, scipy object]:
            Step record with `u_apply`, `predicted_states`, `qp_solution`,
            `active_constraints`, `status`, `degraded`, `solve_time`,
            `setup_time`, the references and the operating point. `slack`
            counts half-widths of the soft rows.
        """
        start = time.perf_counter()
        p, u, cfg = self.params, self.speed, self.config
        x = np.asarray(measurement, dtype=float)
        if x.shape != (self.n_x,):
            raise DimensionError(
                f"Measurement must have shape ({self.n_x},), got {x.shape}.")
        if not np.all(np.isfinite(x)):
            raise DimensionError("Measurement contains non-finite values.")
        W0 = np.asarray(command, dtype=float)
        if W0.shape != (N_INPUTS,):
            raise DimensionError(f"Command must have shape (8,), got {W0.shape}.")
        x = self.measurement_gain * x
        if delta_d is None and p.model_kind == ModelKind.GENERAL_EV:
            delta_d = W0[1]

        alpha, f_z, f_y, lin = operating_point(x, W0, p, u, phi_r=self.phi_r)
        model = assemble(p, u, lin, W0, self.actuators, phi_r=self.phi_r)
        discrete = discretize(model, cfg.sample_time)
        x_ref, delta_d, r_d, psi_d = self._references(x, delta_d, checkpoint, y_d)
        omega = x[4:8] if p.model_kind == ModelKind.GENERAL_EV else None
        constraints = build_constraints(p, u, W0, f_z, f_y, self.actuators,
                                        omega_current=omega,
                                        slack_weight=cfg.slack_weight)
        builder = build_sparse_cftoc if cfg.formulation == "sparse" else build_cftoc
        qp = builder(discrete, x, x_ref, constraints, cfg, enabled=self.enabled,
                     u_prev=self._previous_input(W0))
        solution = self.solver.solve(qp, warm=self._warm_start(qp))

        degraded = solution.status != QpStatus.SOLVED
        if solution.status in (QpStatus.PRIMAL_INFEASIBLE, QpStatus.DUAL_INFEASIBLE):
            warnings.warn("MPC problem reported {}; applying a zero delta.".format(
                solution.status.name))
            U = np.zeros((cfg.horizon, N_INPUTS))
            slack = 0.0
        else:
            if solution.status == QpStatus.MAX_ITER_REACHED:
                warnings.warn("ADMM reached max_iter={}; using the last iterate.".format(
                    cfg.solver.max_iter))
            U, slack = extract_inputs(solution.x, qp.meta)

        lower, upper = constraints.input_box()
        u_apply = np.clip(U[0], lower, upper)
        u_apply[self.actuators.mask == 0] = 0.0
        U[0] = u_apply
        predicted = predict_states(discrete, x, U)

        active = np.zeros(0, dtype=int)
        if not degraded and qp.m:
            tol = 1e-6 * np.maximum(1.0, np.abs(solution.z))
            active = np.flatnonzero((np.abs(solution.z - qp.l) <= tol)
                                    | (np.abs(solution.z - qp.u) <= tol))

        res = create_step_result(
            u_apply=u_apply,
            predicted_states=predicted,
            inputs=U,
            qp_solution=solution,
            active_constraints=active,
            status=solution.status,
            degraded=degraded,
            slack=slack,
            solve_time=solution.solve_time,
            setup_time=solution.setup_time,
            stage_rows=qp.meta["stage_rows"],
            step_time=time.perf_counter() - start,
            x=x,
            command=W0,
            x_ref=x_ref,
            delta_d=delta_d,
            r_d=r_d,
            psi_d=psi_d,
            alpha=alpha,
            f_z=f_z,
            f_y=f_y,
            ri=rollover_index(x, p, phi_r=self.phi_r),
            linearizations=lin,
            model=model,
            constraints=constraints,
        )
        logger.debug("MPC step: status=%s nit=%d solve=%.2f ms slack=%.3g",
                     solution.status.name, solution.nit,
                     1e3 * solution.solve_time, slack)
        self.last_result = res
        return res
