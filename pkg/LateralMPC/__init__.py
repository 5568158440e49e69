"""
`LateralMPC` is a lateral-stability model predictive control toolkit for
four-wheel vehicles. It linearizes a nonlinear tire model at every control
step, builds an affine vehicle model (a general electric vehicle with
torque vectoring, or a very-high-speed racing car with banking), and
solves the resulting constrained finite-time optimal control problem with
an operator-splitting QP solver. A nonlinear plant and scenario runner
close the loop for desk verification.

## Install

pip install LateralMPC

"""

from . import callbacks
from . import controller
from . import simulation
from . import solver
from . import tires
from . import vehicle
from .controller import MpcConfig, MpcController
from .exceptions import (ConfigurationError, DimensionError, DomainError,
                         ModelError)
from .reference import Checkpoint, CheckpointSchedule, desired_yaw_rate
from .simulation import (Scenario, load_scenario, metrics, run_scenario,
                         sweep_speeds)
from .solver import ADMMSolver, QuadraticProgram, SolverSettings
from .tires import TireParams
from .utils import dump, load
from .vehicle import (ActuatorConfig, GeneralEvParams, VhsParams,
                      load_vehicle)

__version__ = "0.1.1"


__all__ = (
    "callbacks",
    "controller",
    "simulation",
    "solver",
    "tires",
    "vehicle",
    "MpcConfig",
    "MpcController",
    "ConfigurationError",
    "DimensionError",
    "DomainError",
    "ModelError",
    "Checkpoint",
    "CheckpointSchedule",
    "desired_yaw_rate",
    "Scenario",
    "load_scenario",
    "metrics",
    "run_scenario",
    "sweep_speeds",
    "ADMMSolver",
    "QuadraticProgram",
    "SolverSettings",
    "TireParams",
    "dump",
    "load",
    "ActuatorConfig",
    "GeneralEvParams",
    "VhsParams",
    "load_vehicle",
)
