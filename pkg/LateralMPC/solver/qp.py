"""Quadratic programs in the two-sided form

    minimize    0.5 x' P x + q' x
    subject to  l <= A x <= u

and the records the solver returns.
"""
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict

import numpy as np
import scipy.sparse as sp
from scipy.optimize import OptimizeResult

from ..exceptions import DimensionError

SYMMETRY_TOL = 1e-8


class QpStatus(IntEnum):
    SOLVED = 1
    MAX_ITER_REACHED = -2
    PRIMAL_INFEASIBLE = -3
    DUAL_INFEASIBLE = -4


def _vector(value, name, length):
    value = np.asarray(value, dtype=float).ravel()
    if value.shape != (length,):
        raise DimensionError(
            f"{name} must have length {length}, got {value.shape[0]}.")
    return value


@dataclass(frozen=True, eq=False)
class QuadraticProgram:
    """
    Problem data. `P` and `A` are stored as CSC matrices, bounds may be
    infinite.

    Parameters
    ----------
    * `P` [array or sparse matrix, shape=(n, n)]:
        Symmetric positive semidefinite cost matrix.

    * `q` [array, shape=(n,)]

    * `A` [array or sparse matrix, shape=(m, n)]

    * `l`, `u` [array, shape=(m,)]:
        Bounds with l <= u.

    * `meta` [dict, optional]:
        Free-form information about how the problem was built.
    """
    P: Any
    q: np.ndarray
    A: Any
    l: np.ndarray
    u: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        P = sp.csc_matrix(self.P, dtype=float)
        if P.shape[0] != P.shape[1]:
            raise DimensionError(f"P must be square, got shape {P.shape}.")
        n = P.shape[0]
        A = self.A
        if A is None:
            A = sp.csc_matrix((0, n))
        A = sp.csc_matrix(A, dtype=float)
        if A.shape[1] != n:
            raise DimensionError(
                f"A has {A.shape[1]} columns but P has {n} rows.")
        m = A.shape[0]
        q = _vector(self.q, "q", n)
        lower = _vector(self.l if self.l is not None else [], "l", m)
        upper = _vector(self.u if self.u is not None else [], "u", m)
        for name, data in (("P", P.data), ("A", A.data), ("q", q)):
            if not np.all(np.isfinite(data)):
                raise DimensionError(f"{name} contains non-finite values.")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise DimensionError("Bounds contain NaN.")
        if np.any(lower > upper):
            raise DimensionError(
                "Lower bounds exceed upper bounds in rows "
                f"{np.flatnonzero(lower > upper).tolist()}.")
        asymmetry = abs(P - P.T).max() if P.nnz else 0.0
        if asymmetry > SYMMETRY_TOL * max(1.0, abs(P).max() if P.nnz else 1.0):
            raise DimensionError(f"P is not symmetric (max |P - P'| = {asymmetry}).")
        P.sort_indices()
        A.sort_indices()
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "l", lower)
        object.__setattr__(self, "u", upper)

    @property
    def n(self):
        return self.P.shape[0]

    @property
    def m(self):
        return self.A.shape[0]

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.P @ x) + self.q @ x)


def kkt_residuals(qp: QuadraticProgram, x, y):
    """
    Primal and dual residuals of a candidate primal-dual pair.

    Returns
    -------
    * `primal` [float]:
        ||A x - proj_[l, u](A x)||_inf, zero without constraints.

    * `dual` [float]:
        ||P x + q + A' y||_inf.
    """
    x = _vector(x, "x", qp.n)
    y = _vector(y, "y", qp.m)
    Ax = qp.A @ x
    if qp.m:
        primal = float(np.max(np.abs(Ax - np.clip(Ax, qp.l, qp.u))))
    else:
        primal = 0.0
    dual = float(np.max(np.abs(qp.P @ x + qp.q + qp.A.T @ y))) if qp.n else 0.0
    return primal, dual


def create_solution(x, y, z, status, nit, primal_residual, dual_residual,
                    solve_time, polished=False, fun=None, setup_time=0.0):
    """
    Initialize a `QpSolution` record.

    Parameters
    ----------
    * `x` [array, shape=(n,)]:
        Primal solution.

    * `y` [array, shape=(m,)]:
        Dual solution, negative on active lower bounds and positive on
        active upper bounds.

    * `z` [array, shape=(m,)]:
        Constraint values of the final iterate.

    * `status` [QpStatus]

    * `nit` [int]:
        Number of iterations.

    * `solve_time` [float]:
        Wall time of the whole call in s, setup included.

    * `setup_time` [float, default=0.0]:
        Part of `solve_time` spent scaling and factorizing.

    Returns
    -------
    * `res` [`OptimizeResult`, scipy object]
    """
    res = OptimizeResult()
    res.x = np.asarray(x, dtype=float)
    res.y = np.asarray(y, dtype=float)
    res.z = np.asarray(z, dtype=float)
    res.status = QpStatus(status)
    res.success = res.status == QpStatus.SOLVED
    res.nit = int(nit)
    res.primal_residual = float(primal_residual)
    res.dual_residual = float(dual_residual)
    res.solve_time = float(solve_time)
    res.setup_time = float(setup_time)
    res.polished = bool(polished)
    res.fun = fun
    return res


def dump_qp(qp: QuadraticProgram, path):
    """
    Write a problem as plain text: a header `qp n m`, then the sections
    `P nnz` and `A nnz` with one `row col value` triplet per line and the
    vectors `q`, `l`, `u` with one value per line.
    """
    def triplets(name, matrix):
        coo = matrix.tocoo()
        lines = [f"{name} {coo.nnz}"]
        lines += [f"{i} {j} {v!r}" for i, j, v in
                  zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())]
        return lines

    def values(name, vector):
        return [f"{name} {len(vector)}"] + [repr(float(v)) for v in vector]

    lines = [f"qp {qp.n} {qp.m}"]
    lines += triplets("P", qp.P)
    lines += values("q", qp.q)
    lines += triplets("A", qp.A)
    lines += values("l", qp.l)
    lines += values("u", qp.u)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_qp(path) -> QuadraticProgram:
    """Read a problem written by `dump_qp`."""
    with open(path) as f:
        lines = [line.split() for line in f if line.strip()]
    try:
        header = lines[0]
        if header[0] != "qp":
            raise DimensionError(f"\"{path}\" is not a QP dump.")
        n, m = int(header[1]), int(header[2])
        position = 1
        sections = {}
        while position < len(lines):
            name, count = lines[position][0], int(lines[position][1])
            block = lines[position + 1:position + 1 + count]
            position += 1 + count
            if name in ("P", "A"):
                rows = [int(entry[0]) for entry in block]
                cols = [int(entry[1]) for entry in block]
                data = [float(entry[2]) for entry in block]
                shape = (n, n) if name == "P" else (m, n)
                sections[name] = sp.csc_matrix((data, (rows, cols)), shape=shape)
            else:
                sections[name] = np.array([float(entry[0]) for entry in block])
        return QuadraticProgram(sections["P"], sections["q"], sections["A"],
                                sections["l"], sections["u"])
    except (IndexError, KeyError, ValueError) as error:
        if isinstance(error, DimensionError):
            raise
        raise DimensionError(f"Malformed QP dump \"{path}\": {error!r}")
