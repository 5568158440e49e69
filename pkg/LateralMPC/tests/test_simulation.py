import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from LateralMPC import load
from LateralMPC.callbacks import (CheckpointSaver, DeadlineStopper,
                                  SolveTimeStopper, TimerCallback,
                                  VerboseCallback)
from LateralMPC.controller import MpcConfig
from LateralMPC.exceptions import ConfigurationError
from LateralMPC.solver import QpStatus
from LateralMPC.simulation import (SimTrace, TraceRecorder, lateral_errors,
                                   load_scenario, metrics, run_scenario,
                                   sweep_speeds)
from LateralMPC.vehicle import GRAVITY, ModelKind, VhsParams


def step_steer(steps=15, *extra):
    return load_scenario("general_ev_step_steer",
                         [f"scenario.steps={steps}", *extra])


def overtake(name="vhs_overtake_flat", steps=40, *extra):
    return load_scenario(name, [f"scenario.steps={steps}", "mpc.horizon=15",
                                *extra])


def record_rows(kind, rows):
    recorder = TraceRecorder(kind, metadata={"u": 50.0})
    n_x = 5 if kind == ModelKind.VHS else 8
    for k, (x_world, state, f_z) in enumerate(rows):
        recorder.append(time=0.05 * k, x_world=x_world, psi=0.0,
                        state=state, command=np.zeros(8), delta=np.zeros(8),
                        alpha=[0.0, 0.0, 0.05 * k, 0.0], f_z=f_z,
                        ri=0.1 * k, status=1 if k else -2,
                        solve_ms=float(k + 1), slack=0.0)
        assert len(state) == n_x
    return recorder.to_trace()


@pytest.mark.fast_test
def test_recorder_stacks_rows():
    loads = [1000.0, 900.0, 1100.0, 1000.0]
    trace = record_rows(ModelKind.VHS, [
        (0.0, [0.0, 0, 0, 0, 0], loads),
        (100.0, [-1.0, 0, 0.01, 0, 0], loads),
        (200.0, [-2.5, 0, 0.02, 0, 0], loads),
    ])
    assert isinstance(trace, SimTrace)
    assert trace.n_steps == 3
    assert trace.states.shape == (3, 5)
    assert_array_equal(trace.lateral_position, [0.0, -1.0, -2.5])
    assert_array_equal(trace.yaw_rate, [0.0, 0.01, 0.02])
    assert len(trace.columns()) == trace.as_array().shape[1]
    empty = TraceRecorder("general_ev").to_trace()
    assert empty.n_steps == 0
    assert empty.states.shape == (0, 8)
    with pytest.raises(AttributeError):
        empty.lateral_position


@pytest.mark.fast_test
def test_metrics_of_a_recorded_trace():
    scenario, _, params = overtake(steps=3)
    loads = [1000.0, 900.0, 1100.0, 1000.0]
    trace = record_rows(ModelKind.VHS, [
        (0.0, [0.0, 0, 0, 0, 0], loads),
        (100.0, [-1.0, 0, 0.01, 0, 0], loads),
        (200.0, [-2.5, 0, 0.02, 0, 0], loads),
    ])
    # targets: -3 before x=150, then 0
    assert_allclose(lateral_errors(trace, scenario), [3.0, 2.0, -2.5])
    report = metrics(trace, scenario, params)
    assert report.n_steps == 3
    assert_allclose(report.max_lateral_error, 3.0)
    assert_allclose(report.mean_lateral_error, 2.5)
    assert_allclose(report.max_abs_alpha, 0.1)
    assert_allclose(report.max_abs_ri, 0.2)
    assert_allclose(report.mean_load_left_minus_right, 200.0)
    assert_allclose(report.mean_solve_ms, 2.0)
    assert_allclose(report.max_solve_ms, 3.0)
    assert report.n_degraded == 1
    assert report.violations["rear_slip"] == 0
    assert report.violations["front_slip"] == 0
    assert report.violations["rollover_index"] == 0
    assert report.violations["yaw_rate"] == 0
    without_scenario = metrics(trace)
    assert_allclose(without_scenario.max_lateral_error, 2.5)
    assert without_scenario.violations == {}


@pytest.mark.fast_test
def test_trace_csv(tmp_path):
    loads = [1000.0, 1000.0, 1000.0, 1000.0]
    trace = record_rows(ModelKind.VHS, [
        (0.0, [0.0, 0, 0, 0, 0], loads),
        (2.5, [0.1, 0, 0, 0, 0], loads),
    ])
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    with open(path) as f:
        header = f.readline().strip().split(",")
    assert header == trace.columns()
    assert header[:4] == ["time", "x_world", "psi", "y"]
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (2, len(header))
    assert_allclose(data, trace.as_array())


@pytest.mark.fast_test
def test_run_requires_matching_inputs():
    scenario, config, params = step_steer(steps=2)
    with pytest.raises(ConfigurationError):
        run_scenario(scenario, config, VhsParams())
    other = MpcConfig.default("general_ev", sample_time=0.05)
    mismatched = scenario.from_dict({**scenario.to_dict(), "sample_time": 0.1})
    with pytest.raises(ConfigurationError):
        run_scenario(mismatched, other, params)


@pytest.mark.slow_test
def test_step_steer_turns_left_without_losing_load():
    scenario, config, params = step_steer(steps=15)
    trace = run_scenario(scenario, config, params)
    assert trace.n_steps == 15
    assert trace.metadata["scenario"] == "general_ev_step_steer"
    assert_allclose(trace.f_z.sum(axis=1), params.m * GRAVITY, rtol=1e-9)
    assert trace.yaw_rate[-1] > 0
    assert np.all(np.isfinite(trace.states))
    # the controller only moves the torques
    assert_array_equal(trace.deltas[:, 1::2], 0.0)
    assert_allclose(trace.commands[:, 1], scenario.delta_d)
    assert np.all(trace.status != -3)
    report = metrics(trace, scenario, params)
    assert report.max_lateral_error == 0.0
    assert report.n_steps == 15


@pytest.mark.slow_test
def test_runs_are_deterministic():
    scenario, config, params = step_steer(steps=5)
    first = run_scenario(scenario, config, params)
    second = run_scenario(scenario, config, params)
    assert_array_equal(first.states, second.states)
    assert_array_equal(first.deltas, second.deltas)


@pytest.mark.slow_test
def test_overtake_moves_towards_the_first_checkpoint():
    scenario, config, params = overtake(steps=40)
    trace = run_scenario(scenario, config, params)
    assert trace.n_steps == 40
    assert_allclose(trace.x_world[-1], 39 * scenario.u * config.sample_time)
    assert trace.lateral_position[-1] < 0
    assert np.max(np.abs(trace.alpha)) <= 0.110
    assert_allclose(trace.f_z.sum(axis=1), params.m * GRAVITY, rtol=1e-9)
    # the racing layout never touches front torques or rear steering
    assert_array_equal(trace.deltas[:, [0, 2, 5, 7]], 0.0)


@pytest.mark.slow_test
def test_banking_loads_the_lower_side():
    scenario, config, params = overtake("vhs_overtake_banked", steps=20)
    assert_allclose(scenario.phi_r, np.deg2rad(23.0))
    trace = run_scenario(scenario, config, params)
    report = metrics(trace, scenario, params)
    assert report.mean_load_left_minus_right > 0


@pytest.mark.slow_test
def test_prediction_error_scenario_runs():
    scenario, config, params = overtake("vhs_overtake_model_err", steps=10)
    assert scenario.prediction_error_gain == 0.95
    trace = run_scenario(scenario, config, params)
    assert trace.metadata["prediction_error_gain"] == 0.95
    assert np.all(np.isfinite(trace.states))


@pytest.mark.slow_test
def test_linearized_plant_run():
    scenario, config, params = step_steer(5, "scenario.tire_mode=linearized")
    trace = run_scenario(scenario, config, params)
    assert trace.n_steps == 5
    assert np.all(np.isfinite(trace.states))


@pytest.mark.slow_test
def test_solver_failure_applies_zero_delta(monkeypatch):
    scenario, config, params = step_steer(steps=3)

    def failing_step(self, *args, **kwargs):
        raise np.linalg.LinAlgError("singular matrix")

    monkeypatch.setattr("LateralMPC.simulation.runner.MpcController.step",
                        failing_step)
    trace = run_scenario(scenario, config, params)
    assert trace.n_steps == 3
    assert_array_equal(trace.status, 0)
    assert_array_equal(trace.deltas, 0.0)


@pytest.mark.slow_test
def test_callbacks(tmp_path, capsys):
    scenario, config, params = step_steer(steps=4)
    timer = TimerCallback()
    path = tmp_path / "trace.pkl"
    saver = CheckpointSaver(path, every=2)
    verbose = VerboseCallback(scenario.steps, every=2)
    trace = run_scenario(scenario, config, params,
                         callbacks=[timer, saver, verbose])
    assert trace.n_steps == 4
    assert len(timer.iter_time) == 4
    saved = load(path)
    assert saved.n_steps == 4
    assert_array_equal(saved.states, trace.states)
    out = capsys.readouterr().out
    assert "Step 2/4" in out and "Step 4/4" in out
    assert "Step 1/4" not in out


@pytest.mark.slow_test
def test_stoppers_end_the_run_early():
    scenario, config, params = step_steer(steps=5)
    stopper = SolveTimeStopper(sample_time=0.0)
    trace = run_scenario(scenario, config, params, callbacks=stopper)
    assert trace.n_steps == 1
    assert stopper.overrun_step == 0
    deadline = DeadlineStopper(total_time=0.0)
    trace = run_scenario(scenario, config, params, callbacks=[deadline])
    assert trace.n_steps == 1
    trace = run_scenario(scenario, config, params,
                         callbacks=lambda res: res.step == 2)
    assert trace.n_steps == 3
    with pytest.raises(ConfigurationError):
        run_scenario(scenario, config, params, callbacks=[TimerCallback(), 3])


@pytest.mark.slow_test
def test_speed_sweep():
    scenario, config, params = overtake(steps=5)
    report = sweep_speeds(scenario, config, params, speeds=(30.0, 45.0))
    assert_array_equal(report.speeds, [30.0, 45.0])
    assert len(report.traces) == 2
    assert report.traces[1].metadata["u"] == 45.0
    assert report.max_lateral_error.shape == (2,)
    assert np.all(report.max_lateral_error >= 0)
    with pytest.raises(ConfigurationError):
        sweep_speeds(scenario, config, params, speeds=(30.0, 0.0))


def full_overtake(name, steps=170):
    # 170 samples at 50 m/s cover x = 0 .. 422.5 m
    scenario, config, params = load_scenario(name, [f"scenario.steps={steps}"])
    assert config.horizon == 50
    return scenario, params, run_scenario(scenario, config, params)


@pytest.mark.slow_test
def test_full_step_steer_holds_a_torque_couple():
    scenario, config, params = load_scenario("general_ev_step_steer")
    trace = run_scenario(scenario, config, params)
    assert trace.n_steps == 250
    assert not np.any(trace.status == QpStatus.PRIMAL_INFEASIBLE)
    assert not np.any(trace.status == QpStatus.DUAL_INFEASIBLE)
    assert_allclose(trace.f_z.sum(axis=1), params.m * GRAVITY, rtol=1e-6)
    tail = slice(-50, None)
    u = scenario.u
    r_bicycle = u * scenario.delta_d / (params.l + params.k_usd * u ** 2)
    r_ss = trace.yaw_rate[tail].mean()
    assert abs(r_ss - r_bicycle) > 1e-3
    # left wheels are driven and right wheels braked against the turn
    left = trace.states[tail][:, [4, 6]].mean()
    right = trace.states[tail][:, [5, 7]].mean()
    assert left > right
    torque_left = trace.deltas[tail][:, [0, 4]].sum(axis=1)
    torque_right = trace.deltas[tail][:, [2, 6]].sum(axis=1)
    assert np.mean(torque_left - torque_right) > 0


@pytest.mark.slow_test
@pytest.mark.parametrize("name", ["vhs_overtake_flat", "vhs_overtake_banked",
                                  "vhs_overtake_model_err"])
def test_full_overtake_completes_within_the_slip_bound(name):
    scenario, params, trace = full_overtake(name)
    y = trace.lateral_position
    reached = (trace.x_world <= 200.0) & (np.abs(y + 3.0) <= 0.3)
    assert np.any(reached)
    assert trace.x_world[-1] >= 400.0
    returned = trace.x_world >= 400.0
    assert np.all(np.abs(y[returned]) <= 0.3)
    assert np.max(np.abs(trace.alpha)) <= params.alpha_r_max + 0.005
    assert_allclose(trace.f_z.sum(axis=1), params.m * GRAVITY, rtol=1e-6)
    assert not np.any(trace.status == QpStatus.PRIMAL_INFEASIBLE)


@pytest.mark.slow_test
def test_full_overtake_load_transfer():
    _, params, flat = full_overtake("vhs_overtake_flat", steps=140)
    left = flat.f_z[:, 0] + flat.f_z[:, 2]
    right = flat.f_z[:, 1] + flat.f_z[:, 3]
    # steering out to y = -3 is a right turn, the left pair is outside
    steer_out = (flat.x_world < 150.0) & (flat.yaw_rate < -0.01)
    assert np.any(steer_out)
    assert np.mean(left[steer_out] - right[steer_out]) > 0
    scenario, _, banked = full_overtake("vhs_overtake_banked", steps=140)
    report = metrics(banked, scenario, params)
    assert report.mean_load_left_minus_right > 0


@pytest.mark.slow_test
def test_full_speed_sweep_error_grows_with_speed():
    scenario, config, params = load_scenario("vhs_overtake_flat")
    report = sweep_speeds(scenario, config, params, speeds=(30.0, 45.0, 55.0))
    assert np.all(np.isfinite(report.max_lateral_error))
    assert np.all(np.diff(report.max_lateral_error) >= 0)


@pytest.mark.slow_test
def test_racing_controller_meets_the_solve_rate():
    scenario, config, params = load_scenario("vhs_overtake_flat",
                                             ["scenario.steps=60"])
    trace = run_scenario(scenario, config, params)
    assert config.formulation == "condensed" and config.horizon == 50
    # the first step starts cold
    assert np.mean(trace.solve_ms[1:]) <= 20.0
