"""
Operator-splitting (ADMM) solver for convex quadratic programs.

The iteration works on the equilibrated data and splits the constraint
as A x = z, z in [l, u]:

    (x~, z~)  <- solution of the linear system with P + sigma I and rho
    x         <- alpha x~ + (1 - alpha) x
    z         <- proj_[l, u](alpha z~ + (1 - alpha) z + y / rho)
    y         <- y + rho (alpha z~ + (1 - alpha) z_prev - z)

The penalty rho is fixed per row, so one factorization serves every
iteration and every later solve with the same P, A and row types. A
problem with the same sparsity pattern and row types but new values keeps
the equilibration of the previous one and is only refactorized.
Residuals and infeasibility certificates are evaluated on the unscaled
problem.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lu_factor, lu_solve
from scipy.sparse.linalg import splu

from ..exceptions import ConfigurationError
from ..utils.config import ConfigMixin
from .qp import QpStatus, QuadraticProgram, create_solution, kkt_residuals

logger = logging.getLogger(__name__)

# Ruiz equilibration limits
MIN_SCALING = 1e-4
MAX_SCALING = 1e4

RHO_MIN = 1e-6
RHO_EQ_FACTOR = 1e3
RHO_TOL = 1e-4

# Stand-in for infinite bounds in certificate products
INFTY = 1e20

LINSYS = ("auto", "kkt", "reduced")

# "auto" factors the dense reduced system up to this many variables
DENSE_MAX_N = 300


@dataclass(frozen=True)
class SolverSettings(ConfigMixin):
    """
    Parameters
    ----------
    * `rho` [float, default=0.1]:
        ADMM penalty of inequality rows.

    * `sigma_reg` [float, default=1e-6]:
        Primal regularization.

    * `alpha_relax` [float, default=1.6]:
        Over-relaxation in (0, 2).

    * `eps_abs`, `eps_rel` [float, default=1e-4]:
        Termination tolerances. They bound the KKT residuals relative to
        the largest of |P x|, |A' y| and |q|, not the distance to the exact
        solution; see `SolverSettings.accurate`.

    * `eps_prim_inf`, `eps_dual_inf` [float, default=1e-5]:
        Infeasibility certificate tolerances.

    * `max_iter` [int, default=4000]

    * `warm_start` [bool, default=True]:
        Start from the solution handed to `solve`.

    * `scaling` [int, default=10]:
        Ruiz equilibration passes, 0 disables scaling.

    * `reuse_scaling` [bool, default=True]:
        Keep the equilibration of the previous problem when the sparsity
        pattern and row types are unchanged.

    * `polish` [bool, default=True]:
        Refine the solution by solving the equality-constrained problem on
        the guessed active set.

    * `polish_refine_iter` [int, default=3]

    * `delta_polish` [float, default=1e-6]:
        Regularization of the polishing system.

    * `linsys` [str, default="auto"]:
        "kkt" factors the sparse quasi-definite KKT matrix with a sparse
        LU, "reduced" the dense matrix P + sigma I + A' diag(rho) A with a
        Cholesky factorization. "auto" picks "reduced" up to `DENSE_MAX_N`
        variables and "kkt" above.
    """
    rho: float = 0.1
    sigma_reg: float = 1e-6
    alpha_relax: float = 1.6
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    eps_prim_inf: float = 1e-5
    eps_dual_inf: float = 1e-5
    max_iter: int = 4000
    warm_start: bool = True
    scaling: int = 10
    reuse_scaling: bool = True
    polish: bool = True
    polish_refine_iter: int = 3
    delta_polish: float = 1e-6
    linsys: str = "auto"

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigurationError(f"rho must be positive, got {self.rho}.")
        if not self.sigma_reg > 0:
            raise ConfigurationError("sigma_reg must be positive.")
        if not 0 < self.alpha_relax < 2:
            raise ConfigurationError(
                f"alpha_relax must lie in (0, 2), got {self.alpha_relax}.")
        for name in ("eps_abs", "eps_rel", "eps_prim_inf", "eps_dual_inf",
                     "delta_polish"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive.")
        if int(self.max_iter) < 1:
            raise ConfigurationError("max_iter must be at least 1.")
        if int(self.scaling) < 0 or int(self.polish_refine_iter) < 0:
            raise ConfigurationError(
                "scaling and polish_refine_iter must be non-negative.")
        if self.linsys not in LINSYS:
            raise ConfigurationError(
                f"linsys must be one of {LINSYS}, got \"{self.linsys}\".")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        object.__setattr__(self, "scaling", int(self.scaling))
        object.__setattr__(self, "polish_refine_iter", int(self.polish_refine_iter))

    @classmethod
    def accurate(cls, **kwargs):
        """
        Tight tolerances with polishing. With these settings solutions of
        small strictly convex problems agree with an exact QP solver to
        1e-4; the defaults trade that accuracy for speed in closed loop.
        """
        defaults = dict(eps_abs=1e-7, eps_rel=1e-7, max_iter=50000)
        defaults.update(kwargs)
        return cls(**defaults)


def _limit_scaling(norms):
    norms = np.where(norms < MIN_SCALING, 1.0, norms)
    return np.minimum(norms, MAX_SCALING)


def _col_inf_norm(matrix):
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        return np.zeros(matrix.shape[1])
    if isinstance(matrix, np.ndarray):
        return np.abs(matrix).max(axis=0)
    return np.asarray(abs(matrix).max(axis=0).todense()).ravel()


def _row_inf_norm(matrix):
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        return np.zeros(matrix.shape[0])
    if isinstance(matrix, np.ndarray):
        return np.abs(matrix).max(axis=1)
    return np.asarray(abs(matrix).max(axis=1).todense()).ravel()


def _scale(matrix, left, right):
    """diag(left) M diag(right) for dense or sparse M."""
    if isinstance(matrix, np.ndarray):
        return left[:, None] * matrix * right[None, :]
    return sp.diags(left) @ matrix @ sp.diags(right)


def ruiz_equilibration(P, A, n_iter):
    """
    Diagonal scalings D, E and cost scale c such that c D P D and E A D
    have columns and rows of similar infinity norm. `P` and `A` may be
    dense arrays or sparse matrices.

    Returns
    -------
    * `D` [array, shape=(n,)]
    * `E` [array, shape=(m,)]
    * `c` [float]
    """
    n, m = P.shape[0], A.shape[0]
    D, E, c = np.ones(n), np.ones(m), 1.0
    P_s, A_s = P.copy(), A.copy()
    for _ in range(n_iter):
        col = np.maximum(_col_inf_norm(P_s), _col_inf_norm(A_s))
        d = 1.0 / np.sqrt(_limit_scaling(col))
        e = 1.0 / np.sqrt(_limit_scaling(_row_inf_norm(A_s)))
        P_s = _scale(P_s, d, d)
        A_s = _scale(A_s, e, d)
        D *= d
        E *= e
        mean_norm = float(np.mean(_col_inf_norm(P_s))) if n else 0.0
        gamma = 1.0 / _limit_scaling(np.array([mean_norm]))[0]
        P_s = gamma * P_s
        c *= gamma
    return D, E, c


def _same_pattern(old, new):
    return (old.shape == new.shape
            and np.array_equal(old.indptr, new.indptr)
            and np.array_equal(old.indices, new.indices))


class ADMMSolver(object):
    """
    ADMM solver with cached scaling and factorization.

    A solver instance keeps mutable workspace and must not be shared
    between threads. Calling `solve` again with a problem that has the same
    `P`, `A` and row types (free, equality, inequality) reuses the
    factorization; only `q`, `l` and `u` are re-scaled. When only the
    values of `P` and `A` changed the equilibration is reused (see
    `SolverSettings.reuse_scaling`) and the system is refactorized.

    Parameters
    ----------
    * `settings` [SolverSettings, optional]:
        Defaults to `SolverSettings()`.

    Attributes
    ----------
    * `n_factorizations` [int]:
        Factorizations done so far.

    * `n_equilibrations` [int]:
        Ruiz equilibrations done so far.
    """

    def __init__(self, settings=None):
        self.settings = settings if settings is not None else SolverSettings()
        self._cache = None
        self.n_factorizations = 0
        self.n_equilibrations = 0

    def _row_types(self, qp):
        free = (qp.l <= -INFTY * 1e-6) & (qp.u >= INFTY * 1e-6)
        equality = ~free & (np.abs(qp.u - qp.l) < RHO_TOL)
        return free, equality

    def _compute_rho(self, free, equality):
        rho = np.full(len(free), self.settings.rho)
        rho[equality] *= RHO_EQ_FACTOR
        rho[free] = RHO_MIN
        return rho

    def _linsys(self, qp):
        if self.settings.linsys == "auto":
            return "reduced" if qp.n <= DENSE_MAX_N else "kkt"
        return self.settings.linsys

    def _cache_matches(self, qp, rho, linsys, values=True):
        """Same structure as the cached problem, and with `values` also the
        same entries."""
        cache = self._cache
        if cache is None or cache["linsys"] != linsys:
            return False
        if not np.array_equal(cache["rho"], rho):
            return False
        if not (_same_pattern(cache["P"], qp.P) and _same_pattern(cache["A"], qp.A)):
            return False
        if not values:
            return True
        return (np.array_equal(cache["P"].data, qp.P.data)
                and np.array_equal(cache["A"].data, qp.A.data))

    def setup(self, qp: QuadraticProgram):
        """Scale the data and factorize, unless the cached workspace can be
        reused."""
        free, equality = self._row_types(qp)
        rho = self._compute_rho(free, equality)
        linsys = self._linsys(qp)
        if self._cache_matches(qp, rho, linsys):
            return self._cache
        settings = self.settings
        n, m = qp.n, qp.m
        dense = linsys == "reduced"
        P = qp.P.toarray() if dense else qp.P
        A = qp.A.toarray() if dense else qp.A
        if (settings.reuse_scaling
                and self._cache_matches(qp, rho, linsys, values=False)):
            D, E, c = self._cache["D"], self._cache["E"], self._cache["c"]
        elif settings.scaling:
            D, E, c = ruiz_equilibration(P, A, settings.scaling)
            self.n_equilibrations += 1
        else:
            D, E, c = np.ones(n), np.ones(m), 1.0
        P_s = c * _scale(P, D, D)
        A_s = _scale(A, E, D)
        if dense:
            reduced = P_s + settings.sigma_reg * np.eye(n)
            if m:
                reduced += A_s.T @ (rho[:, None] * A_s)
            factor = cho_factor(reduced)
            A_sT = np.ascontiguousarray(A_s.T)
        else:
            P_s, A_s = P_s.tocsc(), A_s.tocsc()
            if m:
                kkt = sp.bmat([
                    [P_s + settings.sigma_reg * sp.eye(n), A_s.T],
                    [A_s, -sp.diags(1.0 / rho)],
                ], format="csc")
            else:
                kkt = (P_s + settings.sigma_reg * sp.eye(n)).tocsc()
            factor = splu(kkt)
            A_sT = A_s.T.tocsc()
        self.n_factorizations += 1
        logger.debug("Factorized %s system with n=%d, m=%d", linsys, n, m)
        self._cache = {
            "P": qp.P.copy(), "A": qp.A.copy(), "rho": rho, "linsys": linsys,
            "D": D, "E": E, "c": c, "P_s": P_s, "A_s": A_s, "A_sT": A_sT,
            "factor": factor,
        }
        return self._cache

    def _solve_linear(self, work, x, z, y, q_s):
        settings = self.settings
        rho = work["rho"]
        n = len(x)
        if work["linsys"] == "kkt":
            if len(z):
                rhs = np.concatenate([settings.sigma_reg * x - q_s, z - y / rho])
                sol = work["factor"].solve(rhs)
                x_tilde = sol[:n]
                z_tilde = z + (sol[n:] - y) / rho
            else:
                x_tilde = work["factor"].solve(settings.sigma_reg * x - q_s)
                z_tilde = z
        else:
            rhs = settings.sigma_reg * x - q_s
            if len(z):
                rhs = rhs + work["A_sT"] @ (rho * z - y)
            x_tilde = cho_solve(work["factor"], rhs)
            z_tilde = work["A_s"] @ x_tilde
        return x_tilde, z_tilde

    def solve(self, qp: QuadraticProgram, warm=None):
        """
        Solve a quadratic program.

        Parameters
        ----------
        * `qp` [QuadraticProgram]

        * `warm` [OptimizeResult, optional]:
            Previous solution with fields `x` and `y`, used when
            `settings.warm_start` is set and the dimensions agree.

        Returns
        -------
        * `res` [`OptimizeResult`, scipy object]:
            See `create_solution`. Non-convergence is reported through
            `res.status`, not raised.
        """
        if not isinstance(qp, QuadraticProgram):
            raise TypeError("qp must be a QuadraticProgram, got %s." % type(qp))
        start = time.perf_counter()
        settings = self.settings
        work = self.setup(qp)
        setup_time = time.perf_counter() - start
        D, E, c = work["D"], work["E"], work["c"]
        rho = work["rho"]
        A_s = work["A_s"]
        n, m = qp.n, qp.m
        q_s = c * D * qp.q
        l_s = E * qp.l
        u_s = E * qp.u

        if (settings.warm_start and warm is not None
                and np.shape(warm.x) == (n,) and np.shape(warm.y) == (m,)):
            x = np.asarray(warm.x, dtype=float) / D
            y = c * np.asarray(warm.y, dtype=float) / E
            z = np.clip(A_s @ x, l_s, u_s)
        else:
            x, z, y = np.zeros(n), np.zeros(m), np.zeros(m)

        alpha = settings.alpha_relax
        status = QpStatus.MAX_ITER_REACHED
        primal = dual = np.inf
        nit = 0
        for nit in range(1, settings.max_iter + 1):
            x_prev, y_prev = x, y
            x_tilde, z_tilde = self._solve_linear(work, x, z, y, q_s)
            x = alpha * x_tilde + (1 - alpha) * x
            z_relax = alpha * z_tilde + (1 - alpha) * z
            z = np.clip(z_relax + y / rho, l_s, u_s)
            y = y + rho * (z_relax - z)

            primal, dual, converged = self._termination(qp, work, x, z, y)
            if converged:
                status = QpStatus.SOLVED
                break
            if self._is_primal_infeasible(qp, E * (y - y_prev) / c):
                status = QpStatus.PRIMAL_INFEASIBLE
                break
            if self._is_dual_infeasible(qp, D * (x - x_prev)):
                status = QpStatus.DUAL_INFEASIBLE
                break

        x_u, z_u, y_u = D * x, z / E, E * y / c
        polished = False
        if settings.polish and status == QpStatus.SOLVED:
            polished_solution = self._polish(qp, x_u, z_u, y_u, primal, dual,
                                             dense=work["linsys"] == "reduced")
            if polished_solution is not None:
                x_u, z_u, y_u, primal, dual = polished_solution
                polished = True

        if status == QpStatus.PRIMAL_INFEASIBLE:
            fun = np.inf
        elif status == QpStatus.DUAL_INFEASIBLE:
            fun = -np.inf
        else:
            fun = qp.objective(x_u)
        solve_time = time.perf_counter() - start
        logger.debug("ADMM %s after %d iterations (%.2f ms, setup %.2f ms), "
                     "residuals %.2e / %.2e", status.name, nit, 1e3 * solve_time,
                     1e3 * setup_time, primal, dual)
        return create_solution(x_u, y_u, z_u, status, nit, primal, dual,
                               solve_time, polished=polished, fun=fun,
                               setup_time=setup_time)

    def _termination(self, qp, work, x, z, y):
        """Residuals of the unscaled problem from the scaled iterate:
        A x = E^-1 A_s x_s, P x = (c D)^-1 P_s x_s, A' y = (c D)^-1 A_s' y_s."""
        eps_abs, eps_rel = self.settings.eps_abs, self.settings.eps_rel
        D, E, c = work["D"], work["E"], work["c"]
        cD = c * D
        Px = (work["P_s"] @ x) / cD
        if qp.m:
            Ax = (work["A_s"] @ x) / E
            z = z / E
            ATy = (work["A_sT"] @ y) / cD
            primal = float(np.max(np.abs(Ax - z)))
            eps_primal = eps_abs + eps_rel * max(np.max(np.abs(Ax)),
                                                 np.max(np.abs(z)))
        else:
            ATy = np.zeros(qp.n)
            primal, eps_primal = 0.0, eps_abs
        residual = Px + qp.q + ATy
        dual = float(np.max(np.abs(residual))) if qp.n else 0.0
        scale = [np.max(np.abs(v)) for v in (Px, ATy, qp.q) if len(v)]
        eps_dual = eps_abs + eps_rel * (max(scale) if scale else 0.0)
        return primal, dual, primal <= eps_primal and dual <= eps_dual

    def _is_primal_infeasible(self, qp, delta_y):
        """Certificate A' v = 0 with u' v_+ + l' v_- < 0."""
        eps = self.settings.eps_prim_inf
        if not qp.m:
            return False
        norm = np.max(np.abs(delta_y))
        if norm <= eps:
            return False
        v = delta_y / norm
        upper = np.clip(qp.u, -INFTY, INFTY)
        lower = np.clip(qp.l, -INFTY, INFTY)
        support = upper @ np.maximum(v, 0) + lower @ np.minimum(v, 0)
        if support >= -eps:
            return False
        return np.max(np.abs(qp.A.T @ v)) < eps

    def _is_dual_infeasible(self, qp, delta_x):
        """Certificate P v = 0, q' v < 0 and A v in the recession cone of
        [l, u]."""
        eps = self.settings.eps_dual_inf
        norm = np.max(np.abs(delta_x)) if qp.n else 0.0
        if norm <= eps:
            return False
        v = delta_x / norm
        if qp.q @ v >= -eps:
            return False
        if np.max(np.abs(qp.P @ v)) >= eps:
            return False
        Av = qp.A @ v
        bounded_above = qp.u < INFTY * 1e-6
        bounded_below = qp.l > -INFTY * 1e-6
        if np.any(bounded_above & (Av > eps)) or np.any(bounded_below & (Av < -eps)):
            return False
        return True

    def _polish(self, qp, x, z, y, primal, dual, dense=False):
        """Solve the equality-constrained problem on the guessed active set,
        with a dense LU when `dense`. Returns None when the refined point is
        not better."""
        settings = self.settings
        delta = settings.delta_polish
        low = np.flatnonzero(z - qp.l < -y)
        upp = np.flatnonzero(qp.u - z < y)
        A_red = qp.A[np.concatenate([low, upp])]
        n, k = qp.n, A_red.shape[0]
        rhs = np.concatenate([-qp.q, qp.l[low], qp.u[upp]])
        if dense:
            P, A_red = qp.P.toarray(), A_red.toarray()
            exact = np.block([[P, A_red.T], [A_red, np.zeros((k, k))]])
            kkt = exact + np.diag(np.r_[np.full(n, delta), np.full(k, -delta)])
            try:
                factor = lu_factor(kkt, check_finite=False)
            except (LinAlgError, ValueError) as error:
                logger.debug("Polishing failed: %s", error)
                return None

            def solve_kkt(b):
                return lu_solve(factor, b, check_finite=False)
        else:
            regularized = qp.P + delta * sp.eye(n)
            if k:
                kkt = sp.bmat([[regularized, A_red.T],
                               [A_red, -delta * sp.eye(k)]], format="csc")
                exact = sp.bmat([[qp.P, A_red.T], [A_red, None]], format="csc")
            else:
                kkt = regularized.tocsc()
                exact = qp.P
            try:
                factor = splu(kkt)
            except RuntimeError as error:
                logger.debug("Polishing failed: %s", error)
                return None
            solve_kkt = factor.solve
        sol = solve_kkt(rhs)
        for _ in range(settings.polish_refine_iter):
            sol = sol + solve_kkt(rhs - exact @ sol)
        if not np.all(np.isfinite(sol)):
            return None
        x_pol = sol[:n]
        y_red = sol[n:]
        if np.any(y_red[:len(low)] > 1e-9) or np.any(y_red[len(low):] < -1e-9):
            return None
        y_pol = np.zeros(qp.m)
        y_pol[low] = y_red[:len(low)]
        y_pol[upp] = y_red[len(low):]
        primal_pol, dual_pol = kkt_residuals(qp, x_pol, y_pol)
        tol = 1e-10
        if primal_pol > max(primal, tol) or dual_pol > max(dual, tol):
            return None
        z_pol = np.clip(qp.A @ x_pol, qp.l, qp.u)
        return x_pol, z_pol, y_pol, primal_pol, dual_pol


def solve(qp: QuadraticProgram, settings=None, warm=None):
    """Solve `qp` with a fresh `ADMMSolver`."""
    return ADMMSolver(settings).solve(qp, warm=warm)
