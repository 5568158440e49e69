import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.optimize import LinearConstraint, minimize

from LateralMPC.exceptions import ConfigurationError, DimensionError
from LateralMPC.solver import (ADMMSolver, QpStatus, QuadraticProgram,
                               SolverSettings, dump_qp, kkt_residuals,
                               load_qp, random_box_qp, random_mpc_like_qp,
                               ruiz_equilibration, solve)

TIGHT = SolverSettings(eps_abs=1e-8, eps_rel=1e-8, max_iter=50000)


def active_set_oracle(qp):
    """Enumerate active sets of a small strictly convex QP and return the
    KKT point with the lowest objective."""
    P, A = qp.P.toarray(), qp.A.toarray()
    best = None
    for states in itertools.product((0, -1, 1), repeat=qp.m):
        states = np.array(states)
        active = np.flatnonzero(states)
        if len(active) > qp.n:
            continue
        rhs_bounds = np.where(states[active] < 0, qp.l[active], qp.u[active])
        A_act = A[active]
        kkt = np.block([[P, A_act.T],
                        [A_act, np.zeros((len(active), len(active)))]])
        try:
            sol = np.linalg.solve(kkt, np.concatenate([-qp.q, rhs_bounds]))
        except np.linalg.LinAlgError:
            continue
        x, y_act = sol[:qp.n], sol[qp.n:]
        Ax = A @ x
        if np.any(Ax < qp.l - 1e-9) or np.any(Ax > qp.u + 1e-9):
            continue
        if np.any(y_act * states[active] < -1e-9):
            continue
        if best is None or qp.objective(x) < qp.objective(best):
            best = x
    return best


@pytest.mark.fast_test
def test_qp_validation():
    with pytest.raises(DimensionError):
        QuadraticProgram(np.ones((2, 3)), np.zeros(2), None, None, None)
    with pytest.raises(DimensionError):
        QuadraticProgram(np.eye(2), np.zeros(3), None, None, None)
    with pytest.raises(DimensionError):
        QuadraticProgram(np.eye(2), np.zeros(2), np.eye(2), [1, 0], [0, 1])
    with pytest.raises(DimensionError):
        QuadraticProgram(np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2),
                         None, None, None)
    with pytest.raises(DimensionError):
        QuadraticProgram(np.eye(2), [np.nan, 0], None, None, None)
    with pytest.raises(DimensionError):
        QuadraticProgram(np.eye(2), np.zeros(2), np.eye(3), np.zeros(3),
                         np.ones(3))
    qp = QuadraticProgram(np.eye(2), np.zeros(2), None, None, None)
    assert qp.n == 2 and qp.m == 0


@pytest.mark.fast_test
def test_infinite_bounds_are_allowed():
    qp = QuadraticProgram(np.eye(2), [1.0, -1.0], np.eye(2),
                          [-np.inf, 0.0], [np.inf, np.inf])
    res = solve(qp, SolverSettings(polish=True))
    assert res.status == QpStatus.SOLVED
    assert_allclose(res.x, [-1.0, 1.0], atol=1e-4)


@pytest.mark.fast_test
def test_settings_validation():
    for kwargs in ({"rho": 0}, {"alpha_relax": 2.0}, {"eps_abs": -1},
                   {"max_iter": 0}, {"scaling": -1}, {"linsys": "qr"}):
        with pytest.raises(ConfigurationError):
            SolverSettings(**kwargs)
    settings = SolverSettings(max_iter=100.0)
    assert settings.max_iter == 100
    assert SolverSettings.from_dict(settings.to_dict()) == settings


@pytest.mark.fast_test
def test_kkt_residuals_at_known_optimum():
    qp = QuadraticProgram(np.eye(3), [-2.0, 0.1, 0.0], np.eye(3),
                          -np.ones(3), np.ones(3))
    x = np.array([1.0, -0.1, 0.0])
    y = np.array([1.0, 0.0, 0.0])
    primal, dual = kkt_residuals(qp, x, y)
    assert primal == 0.0
    assert dual == 0.0
    primal, dual = kkt_residuals(qp, [2.0, 0.0, 0.0], np.zeros(3))
    assert_allclose(primal, 1.0)
    assert_allclose(dual, 0.1)


@pytest.mark.fast_test
def test_polished_box_solution_is_exact():
    qp = QuadraticProgram(np.eye(3), [-2.0, 0.1, 0.0], np.eye(3),
                          -np.ones(3), np.ones(3))
    res = solve(qp, SolverSettings(polish=True))
    assert res.success
    assert res.polished
    assert_allclose(res.x, [1.0, -0.1, 0.0], atol=1e-9)
    # dual sign: positive on an active upper bound
    assert_allclose(res.y, [1.0, 0.0, 0.0], atol=1e-9)
    assert_allclose(res.fun, qp.objective(res.x))


@pytest.mark.fast_test
@pytest.mark.parametrize("seed", range(5))
def test_admm_matches_active_set_oracle(seed):
    qp = random_box_qp(4, m=6, seed=seed)
    expected = active_set_oracle(qp)
    assert expected is not None
    res = solve(qp, TIGHT)
    assert res.status == QpStatus.SOLVED
    assert_allclose(res.x, expected, atol=1e-5)
    primal, dual = kkt_residuals(qp, res.x, res.y)
    assert primal < 1e-6
    assert dual < 1e-6


@pytest.mark.fast_test
@pytest.mark.parametrize("seed", [3, 11])
def test_admm_matches_lbfgsb_on_box_problems(seed):
    n = 12
    qp = random_box_qp(n, m=n, seed=seed, condition=50.0)
    A = qp.A.toarray()
    variable = A.argmax(axis=1)
    bounds = [None] * n
    for row, var in enumerate(variable):
        bounds[var] = (qp.l[row], qp.u[row])
    P = qp.P.toarray()
    reference = minimize(lambda x: 0.5 * x @ P @ x + qp.q @ x,
                         np.zeros(n), jac=lambda x: P @ x + qp.q,
                         method="L-BFGS-B", bounds=bounds,
                         options={"ftol": 1e-15, "gtol": 1e-10,
                                  "maxiter": 10000})
    res = solve(qp, TIGHT)
    assert res.success
    assert_allclose(res.x, reference.x, atol=1e-4)
    assert res.fun <= reference.fun + 1e-6


@pytest.mark.fast_test
def test_unconstrained_problem():
    P = np.array([[4.0, 1.0], [1.0, 3.0]])
    q = np.array([1.0, -2.0])
    qp = QuadraticProgram(P, q, None, None, None)
    res = solve(qp, TIGHT)
    assert res.success
    assert res.y.shape == (0,)
    assert_allclose(res.x, np.linalg.solve(P, -q), atol=1e-6)


@pytest.mark.fast_test
def test_equality_rows():
    qp = QuadraticProgram(np.eye(2), np.zeros(2), [[1.0, 1.0]], [1.0], [1.0])
    res = solve(qp, TIGHT)
    assert res.success
    assert_allclose(res.x, [0.5, 0.5], atol=1e-6)


@pytest.mark.fast_test
def test_primal_infeasibility_certificate():
    qp = QuadraticProgram([[1.0]], [0.0], [[1.0], [1.0]],
                          [1.0, -np.inf], [np.inf, 0.0])
    res = solve(qp)
    assert res.status == QpStatus.PRIMAL_INFEASIBLE
    assert not res.success
    assert res.fun == np.inf


@pytest.mark.fast_test
def test_dual_infeasibility_certificate():
    qp = QuadraticProgram([[0.0]], [-1.0], [[1.0]], [0.0], [np.inf])
    res = solve(qp)
    assert res.status == QpStatus.DUAL_INFEASIBLE
    assert res.fun == -np.inf


@pytest.mark.fast_test
def test_iteration_limit_is_reported():
    qp = random_box_qp(6, m=9, seed=2)
    res = solve(qp, SolverSettings(max_iter=1))
    assert res.status == QpStatus.MAX_ITER_REACHED
    assert res.nit == 1
    assert not res.success


@pytest.mark.fast_test
def test_solve_rejects_other_types():
    with pytest.raises(TypeError):
        ADMMSolver().solve({"P": np.eye(2)})


@pytest.mark.fast_test
def test_factorization_is_reused_for_new_linear_terms():
    qp = random_mpc_like_qp(2, 5, seed=1)
    solver = ADMMSolver()
    first = solver.solve(qp)
    shifted = QuadraticProgram(qp.P, qp.q + 0.3, qp.A, qp.l, qp.u)
    second = solver.solve(shifted, warm=first)
    assert first.success and second.success
    assert solver.n_factorizations == 1
    changed = QuadraticProgram(2 * qp.P, qp.q, qp.A, qp.l, qp.u)
    solver.solve(changed)
    assert solver.n_factorizations == 2


@pytest.mark.fast_test
def test_warm_start_saves_iterations():
    qp = random_mpc_like_qp(2, 8, seed=4)
    solver = ADMMSolver()
    cold = solver.solve(qp)
    warm = solver.solve(qp, warm=cold)
    assert cold.success and warm.success
    assert cold.nit > 1
    assert warm.nit < cold.nit
    # mismatching dimensions fall back to a cold start
    other = random_mpc_like_qp(2, 4, seed=4)
    assert solver.solve(other, warm=cold).success


@pytest.mark.fast_test
def test_linear_system_variants_agree():
    qp = random_mpc_like_qp(3, 6, seed=7)
    kkt = solve(qp, SolverSettings(eps_abs=1e-7, eps_rel=1e-7,
                                   max_iter=20000, linsys="kkt"))
    reduced = solve(qp, SolverSettings(eps_abs=1e-7, eps_rel=1e-7,
                                       max_iter=20000, linsys="reduced"))
    assert kkt.success and reduced.success
    assert_allclose(kkt.x, reduced.x, atol=1e-5)
    auto = ADMMSolver()
    auto.solve(qp)
    assert auto._cache["linsys"] == "reduced"
    large = random_box_qp(320, m=320, seed=1)
    auto.solve(large)
    assert auto._cache["linsys"] == "kkt"


@pytest.mark.fast_test
def test_scaling_can_be_disabled():
    qp = random_box_qp(5, m=7, seed=9)
    scaled = solve(qp, TIGHT)
    unscaled = solve(qp, SolverSettings(eps_abs=1e-8, eps_rel=1e-8,
                                        max_iter=50000, scaling=0))
    assert_allclose(scaled.x, unscaled.x, atol=1e-5)


@pytest.mark.fast_test
def test_polish_never_worsens_residuals():
    qp = random_box_qp(6, m=9, seed=5)
    plain = solve(qp, SolverSettings(polish=False))
    polished = solve(qp)
    if polished.polished:
        assert polished.primal_residual <= max(plain.primal_residual, 1e-10)
        assert polished.dual_residual <= max(plain.dual_residual, 1e-10)
    else:
        assert_array_equal(polished.x, plain.x)


@pytest.mark.fast_test
def test_ruiz_equilibration_balances_norms():
    P = np.diag([1e4, 1e-2])
    A = np.diag([1e3, 1e-3])
    qp = QuadraticProgram(P, np.zeros(2), A, -np.ones(2), np.ones(2))
    D, E, c = ruiz_equilibration(qp.P, qp.A, 10)
    assert np.all(D > 0) and np.all(E > 0) and c > 0
    A_s = np.diag(E) @ A @ np.diag(D)
    P_s = c * np.diag(D) @ P @ np.diag(D)
    before = np.ptp(np.log10(np.diag(A)))
    after = np.ptp(np.log10(np.diag(A_s)))
    assert after < before
    assert np.ptp(np.log10(np.diag(P_s))) < np.ptp(np.log10(np.diag(P)))
    D0, E0, c0 = ruiz_equilibration(qp.P, qp.A, 0)
    assert_array_equal(D0, np.ones(2))
    assert_array_equal(E0, np.ones(2))
    assert c0 == 1.0


@pytest.mark.fast_test
def test_dump_and_load_problem(tmp_path):
    qp = QuadraticProgram(np.eye(2), [1.0, -1.0], [[1.0, 2.0]],
                          [-np.inf], [3.0])
    path = tmp_path / "problem.qp"
    dump_qp(qp, path)
    loaded = load_qp(path)
    assert_allclose(loaded.P.toarray(), qp.P.toarray())
    assert_allclose(loaded.A.toarray(), qp.A.toarray())
    assert_array_equal(loaded.q, qp.q)
    assert_array_equal(loaded.l, qp.l)
    assert_array_equal(loaded.u, qp.u)


@pytest.mark.fast_test
def test_load_rejects_malformed_dump(tmp_path):
    path = tmp_path / "broken.qp"
    path.write_text("matrix 2 2\n")
    with pytest.raises(DimensionError):
        load_qp(path)
    path.write_text("qp 2 0\nP 1\n0 0\n")
    with pytest.raises(DimensionError):
        load_qp(path)


def random_feasible_points(qp, count, rng):
    """Points on random rays from the interior point, inside the bounds."""
    A = qp.A.toarray()
    center = qp.meta["feasible_point"]
    Ac = A @ center
    points = np.empty((count, qp.n))
    for i in range(count):
        direction = rng.uniform(-1.0, 1.0, qp.n)
        Ad = A @ direction
        with np.errstate(divide="ignore", invalid="ignore"):
            t_upper = np.where(Ad > 0, (qp.u - Ac) / Ad, np.inf)
            t_lower = np.where(Ad < 0, (qp.l - Ac) / Ad, np.inf)
        t_max = min(t_upper.min(), t_lower.min())
        points[i] = center + rng.uniform(0.0, t_max) * direction
    return points


@pytest.mark.slow_test
def test_accurate_settings_match_a_reference_on_random_problems():
    rng = np.random.default_rng(2024)
    solver = ADMMSolver(SolverSettings.accurate())
    for seed in range(200):
        n = int(rng.integers(2, 21))
        m = int(rng.integers(n, min(2 * n, 40) + 1))
        qp = random_box_qp(n, m=m, seed=seed)
        P, A = qp.P.toarray(), qp.A.toarray()
        reference = minimize(lambda x: 0.5 * x @ P @ x + qp.q @ x,
                             qp.meta["feasible_point"],
                             jac=lambda x: P @ x + qp.q, method="SLSQP",
                             constraints=[LinearConstraint(A, qp.l, qp.u)],
                             options={"ftol": 1e-14, "maxiter": 1000})
        assert reference.success, seed
        res = solver.solve(qp)
        assert res.status == QpStatus.SOLVED, seed
        assert_allclose(res.x, reference.x, atol=1e-4, err_msg=str(seed))
        primal, dual = kkt_residuals(qp, res.x, res.y)
        assert primal <= 1e-4 and dual <= 1e-4, seed


@pytest.mark.fast_test
@pytest.mark.parametrize("seed", range(5))
def test_scaling_the_cost_keeps_the_minimizer(seed):
    qp = random_box_qp(8, m=12, seed=seed)
    settings = SolverSettings.accurate()
    base = solve(qp, settings)
    for factor in (0.01, 100.0):
        scaled = QuadraticProgram(factor * qp.P, factor * qp.q, qp.A, qp.l,
                                  qp.u)
        res = solve(scaled, settings)
        assert res.success
        assert_allclose(res.x, base.x, atol=1e-5)


@pytest.mark.fast_test
@pytest.mark.parametrize("seed", range(5))
def test_solution_beats_random_feasible_points(seed):
    qp = random_box_qp(10, m=16, seed=seed)
    res = solve(qp)
    assert res.success
    points = random_feasible_points(qp, 1000, np.random.default_rng(seed))
    A = qp.A.toarray()
    assert np.all(A @ points.T >= qp.l[:, None] - 1e-12)
    assert np.all(A @ points.T <= qp.u[:, None] + 1e-12)
    values = [qp.objective(point) for point in points]
    assert res.fun <= min(values) + 1e-6


@pytest.mark.fast_test
@pytest.mark.parametrize("seed", [4, 8])
def test_warm_resolve_of_the_same_problem_is_short(seed):
    qp = random_mpc_like_qp(2, 8, seed=seed)
    solver = ADMMSolver()
    cold = solver.solve(qp)
    warm = solver.solve(qp, warm=cold)
    assert cold.success and warm.success
    assert warm.nit <= 10
    assert_allclose(warm.x, cold.x, atol=1e-6)


@pytest.mark.fast_test
def test_scaling_is_reused_when_only_values_change():
    qp = random_mpc_like_qp(2, 5, seed=1)
    changed = QuadraticProgram(2 * qp.P, qp.q, qp.A, 0.5 * qp.l, 0.5 * qp.u)
    solver = ADMMSolver()
    first = solver.solve(qp)
    second = solver.solve(changed)
    assert first.success and second.success
    assert solver.n_factorizations == 2
    assert solver.n_equilibrations == 1
    assert 0.0 < first.setup_time <= first.solve_time
    assert_allclose(second.x, solve(changed).x, atol=1e-4)
    fresh = ADMMSolver(SolverSettings(reuse_scaling=False))
    fresh.solve(qp)
    fresh.solve(changed)
    assert fresh.n_equilibrations == 2
