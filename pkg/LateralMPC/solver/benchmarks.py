"""Random test problems for the QP solver.

Each generator returns a `QuadraticProgram` with known structure, drawn
from a `numpy.random.Generator` so that instances are reproducible from a
seed.
"""
import numpy as np

from ..utils import get_random_generator
from .qp import QuadraticProgram


def random_box_qp(n, m=None, seed=None, condition=10.0):
    """
    Strictly convex QP with box constraints on (a subset of) the variables
    and random general rows, feasible by construction.

    Parameters
    ----------
    * `n` [int]:
        Number of variables.

    * `m` [int, optional]:
        Number of constraint rows. The first `min(m, n)` rows are unit
        rows (variable bounds), the rest dense random rows. Defaults to
        `n`.

    * `seed` [int, Generator or None]

    * `condition` [float, default=10.0]:
        Ratio of the largest to the smallest eigenvalue of P.

    Returns
    -------
    * `qp` [QuadraticProgram]:
        The interior point used to place the bounds is stored in
        `qp.meta["feasible_point"]`.
    """
    rng = get_random_generator(seed)
    m = n if m is None else m
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigenvalues = np.geomspace(1.0, condition, n)
    P = basis @ np.diag(eigenvalues) @ basis.T
    P = 0.5 * (P + P.T)
    q = rng.standard_normal(n) * 5.0
    n_box = min(m, n)
    rows = np.zeros((m, n))
    rows[np.arange(n_box), rng.permutation(n)[:n_box]] = 1.0
    if m > n_box:
        rows[n_box:] = rng.standard_normal((m - n_box, n))
    feasible = rng.uniform(-0.5, 0.5, n)
    center = rows @ feasible
    lower = center - rng.uniform(0.1, 1.0, m)
    upper = center + rng.uniform(0.1, 1.0, m)
    return QuadraticProgram(P, q, rows, lower, upper,
                            meta={"feasible_point": feasible, "seed": seed})


def random_mpc_like_qp(n, horizon, seed=None):
    """Banded positive definite cost with input boxes and rate rows, the
    shape condensed control problems produce."""
    rng = get_random_generator(seed)
    size = n * horizon
    L = np.tril(rng.standard_normal((size, size)) * 0.1)
    P = L @ L.T + np.eye(size)
    q = rng.standard_normal(size)
    rate = np.eye(size) - np.eye(size, k=-n)
    A = np.vstack([np.eye(size), rate])
    lower = np.concatenate([-np.ones(size), -0.5 * np.ones(size)])
    upper = -lower
    return QuadraticProgram(P, q, A, lower, upper, meta={"seed": seed})
