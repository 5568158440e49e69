"""Operator-splitting solver for convex quadratic programs."""
from .qp import (
    QpStatus,
    QuadraticProgram,
    kkt_residuals,
    create_solution,
    dump_qp,
    load_qp,
)
from .admm import ADMMSolver, SolverSettings, ruiz_equilibration, solve
from .benchmarks import random_box_qp, random_mpc_like_qp

__all__ = [
    "QpStatus",
    "QuadraticProgram",
    "kkt_residuals",
    "create_solution",
    "dump_qp",
    "load_qp",
    "ADMMSolver",
    "SolverSettings",
    "ruiz_equilibration",
    "solve",
    "random_box_qp",
    "random_mpc_like_qp",
]
