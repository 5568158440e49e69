import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_almost_equal

from LateralMPC.exceptions import ConfigurationError, DomainError
from LateralMPC.tires import (PacejkaCoeffs, TireOperatingPoint, TireParams,
                              dugoff_lateral_force, effective_radius,
                              lateral_force, lateral_forces, linearize_tire,
                              linearize_wheels, pacejka_lateral_force,
                              peak_longitudinal_force, slip_angle, slip_angles)

DUGOFF = TireParams(c_alpha=47275.0, c_sigma=80000.0)
PACEJKA = TireParams(c_alpha=47275.0, c_sigma=80000.0, model_kind="pacejka",
                     pacejka_coeffs=PacejkaCoeffs())

# slip angles kept away from the Dugoff saturation kink of every load below
ALPHAS = [-0.1, -0.03, 0.005, 0.06, 0.15]
LOADS = [1000.0, 4000.0, 8000.0]


@pytest.mark.fast_test
def test_dugoff_linear_below_saturation():
    op = TireOperatingPoint(0.005, 4000.0)
    assert_almost_equal(dugoff_lateral_force(op, DUGOFF),
                        47275.0 * np.tan(0.005))


@pytest.mark.fast_test
def test_dugoff_zero_slip_and_zero_load():
    assert dugoff_lateral_force(TireOperatingPoint(0.0, 4000.0), DUGOFF) == 0.0
    assert dugoff_lateral_force(TireOperatingPoint(0.1, 0.0), DUGOFF) == 0.0


@pytest.mark.fast_test
@pytest.mark.parametrize("params", [DUGOFF, PACEJKA])
def test_force_bounded_and_odd(params):
    for alpha in np.linspace(-0.5, 0.5, 41):
        for f_z in LOADS:
            force = lateral_force(TireOperatingPoint(alpha, f_z), params)
            mirrored = lateral_force(TireOperatingPoint(-alpha, f_z), params)
            assert abs(force) <= params.mu_y * f_z * (1 + 1e-12)
            assert_allclose(force, -mirrored, atol=1e-9)


@pytest.mark.fast_test
def test_dugoff_saturates_at_friction_limit():
    op = TireOperatingPoint(1.5, 4000.0)
    assert_allclose(dugoff_lateral_force(op, DUGOFF), 4000.0, rtol=0.01)


@pytest.mark.fast_test
def test_pacejka_peak_is_friction_limit():
    alphas = np.linspace(0, 1.0, 2001)
    forces = [pacejka_lateral_force(TireOperatingPoint(a, 4000.0), PACEJKA)
              for a in alphas]
    assert_allclose(max(forces), 4000.0, rtol=1e-4)


@pytest.mark.fast_test
def test_pacejka_needs_coefficients():
    with pytest.raises(ConfigurationError):
        TireParams(c_alpha=1.0, c_sigma=1.0, model_kind="pacejka")
    with pytest.raises(ConfigurationError):
        TireParams(c_alpha=1.0, c_sigma=1.0, pacejka_coeffs=PacejkaCoeffs())
    with pytest.raises(ConfigurationError):
        TireParams(c_alpha=1.0, c_sigma=1.0, model_kind="fiala")


@pytest.mark.fast_test
@pytest.mark.parametrize("params", [DUGOFF, PACEJKA])
def test_linearization_matches_central_difference(params):
    for alpha in ALPHAS:
        for f_z in LOADS:
            op = TireOperatingPoint(alpha, f_z)
            analytic = linearize_tire(op, params)
            central = linearize_tire(op, params, method="central")
            assert_allclose(analytic.c_alpha_tilde, central.c_alpha_tilde,
                            rtol=1e-6)
            assert analytic.f_y_bar == central.f_y_bar
            assert analytic.force(alpha) == analytic.f_y_bar


@pytest.mark.fast_test
def test_central_difference_is_second_order():
    op = TireOperatingPoint(0.02, 4000.0)
    exact = linearize_tire(op, PACEJKA).c_alpha_tilde
    coarse = linearize_tire(op, PACEJKA, method="central", step=1e-2)
    fine = linearize_tire(op, PACEJKA, method="central", step=1e-3)
    ratio = (abs(coarse.c_alpha_tilde - exact)
             / abs(fine.c_alpha_tilde - exact))
    assert 95 < ratio < 105


@pytest.mark.fast_test
def test_linearization_unknown_method():
    with pytest.raises(ValueError):
        linearize_tire(TireOperatingPoint(0.01, 1000.0), DUGOFF, method="forward")


@pytest.mark.fast_test
def test_operating_point_domain():
    with pytest.raises(DomainError):
        TireOperatingPoint(0.01, -1.0)
    with pytest.raises(DomainError):
        TireOperatingPoint(2.0, 1000.0)


@pytest.mark.fast_test
def test_slip_angles():
    assert_almost_equal(slip_angle(1, 0.1, 0.0, 0.0, 20.0, 1.2, 1.8), 0.1)
    alpha = slip_angles([0.1, 0.1, 0.0, 0.0], 1.0, 0.5, 20.0, 1.2, 1.8)
    assert_allclose(alpha, [0.1 - 1.6 / 20, 0.1 - 1.6 / 20,
                            -(1.0 - 0.9) / 20, -(1.0 - 0.9) / 20])
    with pytest.raises(DomainError):
        slip_angles(np.zeros(4), 0.0, 0.0, 0.0, 1.2, 1.8)
    with pytest.raises(ValueError):
        slip_angle(5, 0.0, 0.0, 0.0, 20.0, 1.2, 1.8)


@pytest.mark.fast_test
def test_peak_longitudinal_force():
    assert_almost_equal(peak_longitudinal_force(4000.0, 0.0, DUGOFF), 4000.0)
    assert_almost_equal(peak_longitudinal_force(4000.0, 4000.0, DUGOFF), 0.0)
    assert_almost_equal(
        peak_longitudinal_force(4000.0, 2400.0, DUGOFF), 3200.0)
    with pytest.raises(DomainError):
        peak_longitudinal_force(4000.0, 4100.0, DUGOFF)
    with pytest.raises(DomainError):
        peak_longitudinal_force(0.0, 0.0, DUGOFF)


@pytest.mark.fast_test
def test_effective_radius():
    assert_almost_equal(effective_radius(0.3, 0.3), 0.3)
    theta = np.arccos(0.28 / 0.3)
    assert_almost_equal(effective_radius(0.28, 0.3), np.sin(theta) * 0.3 / theta)
    assert effective_radius(0.28, 0.3) < 0.3
    with pytest.raises(DomainError):
        effective_radius(0.31, 0.3)


@pytest.mark.fast_test
def test_wheel_helpers_floor_negative_loads():
    alpha = np.array([0.02, 0.02, -0.01, -0.01])
    f_z = np.array([-100.0, 3000.0, 3000.0, 2000.0])
    forces = lateral_forces(alpha, f_z, DUGOFF)
    lin = linearize_wheels(alpha, f_z, DUGOFF)
    assert forces[0] == 0.0
    assert lin[0].f_y_bar == 0.0 and lin[0].c_alpha_tilde == 0.0
    assert_allclose([l.f_y_bar for l in lin], forces)


@pytest.mark.fast_test
def test_tire_params_round_trip():
    for params in (DUGOFF, PACEJKA):
        assert TireParams.from_dict(params.to_dict()) == params
    with pytest.raises(ConfigurationError):
        TireParams.from_dict({"c_alpha": 1.0, "c_sigma": 1.0, "grip": 2})
