"""Zero-order-hold discretization of the affine vehicle models."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from ..exceptions import DomainError
from ..vehicle.models import VehicleModel


def zoh(A, B, sample_time):
    """
    Exact discretization of x' = A x + B w with w held over the sample.

    The exponential of the augmented matrix

        M = [A  B]
            [0  0]

    is [[A_d, B_d], [0, I]].
    """
    if not sample_time > 0:
        raise DomainError(f"sample_time must be positive, got {sample_time}.")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    states, inputs = A.shape[0], B.shape[1]
    M = np.block([[A, B], [np.zeros((inputs, states + inputs))]])
    phi = expm(M * sample_time)
    return phi[:states, :states], phi[:states, states:]


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """
    x[k+1] = A_d x[k] + B_d U[k] + E_d W0 + D_d

    `D_d` contains the banking forcing; `C_phi_d` is the discretized
    banking gain on its own (None for the general vehicle).
    """
    A_d: np.ndarray
    B_d: np.ndarray
    E_d: np.ndarray
    D_d: np.ndarray
    C_phi_d: Optional[np.ndarray]
    sample_time: float
    model: VehicleModel

    @property
    def n_x(self):
        return self.A_d.shape[0]

    @property
    def n_u(self):
        return self.B_d.shape[1]

    @property
    def offset(self):
        return self.E_d @ self.model.W0 + self.D_d

    def step(self, x, U=None):
        x_next = self.A_d @ np.asarray(x, dtype=float) + self.offset
        if U is not None:
            x_next = x_next + self.B_d @ np.asarray(U, dtype=float)
        return x_next


def discretize(model: VehicleModel, sample_time: float) -> DiscreteModel:
    """
    Discretize all input channels of a model at once. The affine offset
    and the banking gain are treated as inputs held at 1.

    Parameters
    ----------
    * `model` [VehicleModel]

    * `sample_time` [float]:
        Sample time T_s in s.
    """
    n_u = model.B.shape[1]
    n_w = model.E.shape[1]
    C_phi = model.C_phi if model.C_phi is not None else np.zeros(model.n_x)
    inputs = np.column_stack([model.B, model.E, model.D, C_phi])
    A_d, G_d = zoh(model.A, inputs, sample_time)
    return DiscreteModel(
        A_d=A_d,
        B_d=G_d[:, :n_u],
        E_d=G_d[:, n_u:n_u + n_w],
        D_d=G_d[:, n_u + n_w],
        C_phi_d=G_d[:, -1] if model.C_phi is not None else None,
        sample_time=float(sample_time),
        model=model,
    )
