import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from LateralMPC.controller import discretize
from LateralMPC.exceptions import ConfigurationError, DimensionError, DomainError
from LateralMPC.simulation import Plant, plant_derivatives, rk4_step
from LateralMPC.vehicle import (ActuatorConfig, GeneralEvParams, VhsParams,
                                assemble, body_matrices_vhs, operating_point)

U_EV = 80 / 3.6
U_VHS = 180 / 3.6


def straight_state(p, u=U_EV):
    omega = u / p.r_eff
    return np.array([0, 0, 0, 0, omega, omega, omega, omega], dtype=float)


@pytest.mark.fast_test
def test_straight_driving_is_an_equilibrium():
    p = GeneralEvParams()
    dx = plant_derivatives(straight_state(p), np.zeros(8), None, p, U_EV)
    assert_allclose(dx, 0.0, atol=1e-12)
    dx = plant_derivatives(np.zeros(5), np.zeros(8), np.zeros(8), VhsParams(),
                           U_VHS)
    assert_allclose(dx, 0.0, atol=1e-12)


@pytest.mark.fast_test
def test_banking_forces_the_racing_body():
    p = VhsParams()
    _, _, C_phi = body_matrices_vhs(p, U_VHS)
    dx = plant_derivatives(np.zeros(5), np.zeros(8), None, p, U_VHS,
                           phi_r=0.1)
    assert_allclose(dx, 0.1 * C_phi, atol=1e-12)
    plant = Plant(p, U_VHS, phi_r=0.1)
    assert_allclose(plant.derivatives(np.zeros(5), np.zeros(8)), dx)


@pytest.mark.fast_test
def test_torque_delta_spins_up_its_wheel():
    p = GeneralEvParams()
    delta = np.zeros(8)
    delta[0] = 100.0
    dx = plant_derivatives(straight_state(p), np.zeros(8), delta, p, U_EV)
    assert_allclose(dx[4], 100.0 / p.I_w)
    assert_array_equal(dx[5:], 0.0)
    # a left-side drive torque turns the vehicle to the right
    assert_allclose(dx[1], -p.t_f / (2 * p.r_eff * p.I_zz) * 100.0)
    # the driver torque itself is balanced by the road
    command = np.zeros(8)
    command[0] = 100.0
    dx = plant_derivatives(straight_state(p), command, None, p, U_EV)
    assert_array_equal(dx[4:], 0.0)


@pytest.mark.fast_test
@pytest.mark.parametrize("state", [
    [0.0, 0.05, 0.002, 0.0, 0.0],
    [0.3, -0.02, -0.001, 0.001, 0.002],
])
def test_nonlinear_plant_is_tangent_to_model(state):
    p = VhsParams()
    state = np.asarray(state)
    W0 = np.zeros(8)
    _, _, _, lin = operating_point(np.zeros(5), W0, p, U_VHS)
    model = assemble(p, U_VHS, lin, W0, ActuatorConfig.vhs())
    dx = plant_derivatives(state, W0, None, p, U_VHS)
    assert_allclose(dx, model.derivative(state), rtol=1e-2, atol=1e-6)


@pytest.mark.fast_test
def test_rk4_accuracy_on_exponential_decay():
    decay = lambda x, _: -x
    one_step = rk4_step(decay, [1.0], None, 0.05)
    assert abs(one_step[0] - np.exp(-0.05)) < 5e-9
    fine = rk4_step(decay, [1.0], None, 0.05, n_substeps=10)
    assert abs(fine[0] - np.exp(-0.05)) < 1e-12


@pytest.mark.fast_test
def test_rk4_is_fourth_order():
    decay = lambda x, _: -x
    coarse = abs(rk4_step(decay, [1.0], None, 1.0, n_substeps=10)[0] - np.exp(-1))
    fine = abs(rk4_step(decay, [1.0], None, 1.0, n_substeps=20)[0] - np.exp(-1))
    assert 14 < coarse / fine < 18


@pytest.mark.fast_test
def test_rk4_arguments():
    with pytest.raises(DomainError):
        rk4_step(lambda x, _: -x, [1.0], None, 0.0)
    with pytest.raises(ConfigurationError):
        rk4_step(lambda x, _: -x, [1.0], None, 0.1, n_substeps=0)


@pytest.mark.fast_test
def test_plant_arguments():
    p = GeneralEvParams()
    with pytest.raises(ConfigurationError):
        Plant(p, U_EV, tire_mode="magic")
    with pytest.raises(DomainError):
        Plant(p, 0.0)
    with pytest.raises(ConfigurationError):
        Plant(p, U_EV, substeps=0)
    with pytest.raises(DimensionError):
        plant_derivatives(np.zeros(5), np.zeros(8), None, p, U_EV)
    with pytest.raises(DimensionError):
        plant_derivatives(straight_state(p), np.zeros(4), None, p, U_EV)
    with pytest.raises(DomainError):
        plant_derivatives(straight_state(p), np.zeros(8), None, p, 0.0)


@pytest.mark.fast_test
def test_linearized_plant_matches_the_prediction():
    p = GeneralEvParams()
    x = straight_state(p)
    x[0], x[1] = 0.2, 0.05
    W0 = np.array([0, 0.05, 0, 0.05, 50, 0, 50, 0], dtype=float)
    _, _, _, lin = operating_point(x, W0, p, U_EV)
    model = assemble(p, U_EV, lin, W0, ActuatorConfig.torque_vectoring())
    U = np.array([20, 0, -20, 0, 10, 0, -10, 0], dtype=float)
    plant = Plant(p, U_EV, substeps=100, tire_mode="linearized")
    predicted = discretize(model, 0.1).step(x, U)
    assert_allclose(plant.step(x, W0, U, 0.1, model=model), predicted,
                    rtol=1e-8, atol=1e-6)
    with pytest.raises(ConfigurationError):
        plant.step(x, W0, U, 0.1)


@pytest.mark.fast_test
def test_nonlinear_step_stays_close_to_prediction_for_small_motion():
    p = VhsParams()
    x = np.array([0.0, 0.05, 0.002, 0.0, 0.0])
    W0 = np.zeros(8)
    _, _, _, lin = operating_point(x, W0, p, U_VHS)
    model = assemble(p, U_VHS, lin, W0, ActuatorConfig.vhs())
    predicted = discretize(model, 0.05).step(x)
    actual = Plant(p, U_VHS, substeps=20).step(x, W0, None, 0.05)
    assert_allclose(actual, predicted, rtol=1e-2, atol=1e-5)
