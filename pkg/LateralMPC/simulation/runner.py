"""Closed-loop runs: measure, solve, apply the first delta, integrate."""
import logging
import time

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import OptimizeResult

from ..callbacks import check_callback
from ..controller.constraints import rollover_index
from ..controller.mpc import MpcController
from ..exceptions import ConfigurationError
from ..reference import CheckpointSchedule
from ..utils import eval_callbacks
from ..vehicle.models import LATERAL_INDEX, normal_loads, wheel_slip_angles
from ..vehicle.params import ModelKind, load_vehicle
from .metrics import TraceRecorder, lateral_targets, metrics
from .plant import Plant

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_SPEEDS = (30.0, 45.0, 55.0)

# Trace status of a step whose solver raised instead of returning.
SOLVER_EXCEPTION = 0


def _vehicle_for(scenario, params):
    if params is None:
        params = load_vehicle(scenario.vehicle)
    if params.model_kind != scenario.kind:
        raise ConfigurationError(
            f"Vehicle is a {params.model_kind.value} model but the scenario "
            f"is {scenario.kind.value}.")
    return params


def run_scenario(scenario, config, params=None, callbacks=None):
    """
    Simulate one scenario in closed loop.

    Every sample the controller sees the plant state scaled by the
    scenario's `prediction_error_gain`, and the first control delta is held
    while the plant is integrated over the sample. The general vehicle keeps
    the scenario's driver command throughout; the racing model starts from
    it and then uses the previously applied command, so the controller
    optimizes command changes.

    Parameters
    ----------
    * `scenario` [Scenario]

    * `config` [MpcConfig]:
        Controller tuning; its sample time is the simulation step.

    * `params` [GeneralEvParams or VhsParams, optional]:
        Vehicle; loaded from `scenario.vehicle` when not given.

    * `callbacks` [callable, list of callables, optional]:
        Called after each step with the step record; returning True stops
        the run early.

    Returns
    -------
    * `trace` [SimTrace]
    """
    params = _vehicle_for(scenario, params)
    callbacks = check_callback(callbacks)
    if scenario.sample_time is not None and scenario.sample_time != config.sample_time:
        raise ConfigurationError(
            f"scenario.sample_time={scenario.sample_time} differs from "
            f"mpc.sample_time={config.sample_time}.")
    kind = scenario.kind
    T_s = config.sample_time
    u = scenario.u
    actuators = scenario.actuator_config()
    controller = MpcController(params, config, u, actuators=actuators,
                               phi_r=scenario.phi_r,
                               measurement_gain=scenario.prediction_error_gain)
    plant = Plant(params, u, phi_r=scenario.phi_r,
                  substeps=scenario.plant_substeps, tire_mode=scenario.tire_mode)
    schedule = None
    if kind == ModelKind.VHS and scenario.checkpoints is not None:
        schedule = CheckpointSchedule(scenario.checkpoints, scenario.lookahead,
                                      scenario.min_distance)
    recorder = TraceRecorder(kind, metadata={
        "scenario": scenario.name,
        "model_kind": kind.value,
        "u": u,
        "sample_time": T_s,
        "phi_r": scenario.phi_r,
        "prediction_error_gain": scenario.prediction_error_gain,
        "seed": scenario.seed,
        "horizon": config.horizon,
    })
    yaw = LATERAL_INDEX[kind] + 1
    driver = scenario.driver_command
    x = scenario.initial_state
    x_world, psi = 0.0, 0.0
    previous = driver.copy()
    start = time.perf_counter()
    logger.info("Running %s: %d steps of %.3f s at u=%.2f m/s",
                scenario.name, scenario.steps, T_s, u)

    for k in range(scenario.steps):
        W0 = driver if kind == ModelKind.GENERAL_EV else previous
        step_kwargs = {}
        if kind == ModelKind.VHS:
            step_kwargs["delta_d"] = scenario.delta_d
            if schedule is not None:
                step_kwargs["checkpoint"] = schedule.local_checkpoint(x_world, x[0], psi)
                step_kwargs["y_d"] = schedule.lateral_target(x_world)
        try:
            res = controller.step(x, W0, **step_kwargs)
        except (np.linalg.LinAlgError, RuntimeError) as error:
            logger.warning("Step %d: solver failed (%s); applying a zero delta.",
                           k, error)
            controller.reset()
            res = OptimizeResult(u_apply=np.zeros(8), status=None, slack=0.0,
                                 solve_time=0.0, model=None, degraded=True)
        U = res.u_apply
        applied = W0 + U
        status = SOLVER_EXCEPTION if res.status is None else int(res.status)
        recorder.append(
            time=k * T_s,
            x_world=x_world,
            psi=psi,
            state=x,
            command=applied,
            delta=U,
            alpha=wheel_slip_angles(x, applied, params, u),
            f_z=normal_loads(x, params, phi_r=scenario.phi_r, floor=False),
            ri=rollover_index(x, params, phi_r=scenario.phi_r),
            status=status,
            solve_ms=1e3 * res.solve_time,
            slack=res.slack,
        )

        if res.model is None and plant.tire_mode == "linearized":
            x_next = x
        else:
            x_next = plant.step(x, W0, U, T_s, model=res.model)
        x_world += u * T_s
        psi += 0.5 * T_s * (x[yaw] + x_next[yaw])
        x = x_next
        previous = applied

        if callbacks and res.status is not None:
            res.step = k
            res.n_steps = scenario.steps
            res.time = k * T_s
            res.trace = recorder
            if eval_callbacks(callbacks, res):
                logger.info("Run %s stopped by a callback after %d steps.",
                            scenario.name, k + 1)
                break

    trace = recorder.to_trace()
    logger.info("Finished %s in %.2f s, mean solve %.2f ms, %d degraded steps",
                scenario.name, time.perf_counter() - start,
                float(np.mean(trace.solve_ms)) if trace.n_steps else 0.0,
                int(np.sum(trace.status != 1)))
    return trace


def _run_at_speed(scenario, config, params, speed):
    run = scenario.__class__.from_dict({**scenario.to_dict(), "u": speed})
    trace = run_scenario(run, config, params)
    return speed, trace, metrics(trace, run, params)


def sweep_speeds(scenario, config, params=None, speeds=DEFAULT_SWEEP_SPEEDS,
                 n_jobs=1):
    """
    Rerun a scenario at several constant speeds.

    Parameters
    ----------
    * `scenario`, `config`, `params`:
        As for `run_scenario`.

    * `speeds` [sequence of float, default=(30, 45, 55)]:
        Longitudinal velocities in m/s.

    * `n_jobs` [int, default=1]:
        Number of runs executed in parallel with joblib.

    Returns
    -------
    * `report` [`OptimizeResult`, scipy object]:
        `speeds`, `max_lateral_error` per speed, `traces` and `metrics`.
    """
    params = _vehicle_for(scenario, params)
    speeds = [float(s) for s in speeds]
    if not speeds or any(not s > 0 for s in speeds):
        raise ConfigurationError(f"Sweep speeds must be positive, got {speeds}.")
    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_at_speed)(scenario, config, params, speed)
        for speed in speeds)
    report = OptimizeResult()
    report.speeds = np.array([r[0] for r in results])
    report.traces = [r[1] for r in results]
    report.metrics = [r[2] for r in results]
    report.max_lateral_error = np.array([m.max_lateral_error for m in report.metrics])
    return report


def lateral_errors(trace, scenario):
    """Signed lateral error of every row of a racing-model trace."""
    return trace.lateral_position - lateral_targets(trace, scenario)
