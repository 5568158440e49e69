"""
Constrained finite-time optimal control problems as quadratic programs.

Over a horizon of N steps the controller minimizes

    sum_k (x[k] - x_ref)' Q (x[k] - x_ref) + U[k]' R U[k]
        + (U[k] - U[k-1])' S (U[k] - U[k-1]) + sigma s^2 + sigma_lin s

subject to the discrete dynamics, hard input rows at every step and the
soft rows at every stage, relaxed by one shared slack s >= 0. Stage k of a
soft row reads the predicted state x[k+1] and the input U[k] held while it
is reached. Soft rows are divided by their half-width first, so s counts
half-widths and a linear weight sigma_lin above the multipliers of the
unrelaxed problem makes the relaxation exact. Only the enabled control
channels are decision variables.

`build_cftoc` eliminates the states through the affine prediction
X = Phi x0 + Gamma U + offsets (condensed form). `build_sparse_cftoc`
keeps them as variables tied by equality rows.
"""
import numpy as np

from ..exceptions import DimensionError
from ..solver.qp import QuadraticProgram
from .constraints import ConstraintSet
from .discretization import DiscreteModel


def _weights(values, size, name):
    weights = np.asarray(values, dtype=float).ravel()
    if weights.shape != (size,):
        raise DimensionError(f"{name} must have {size} entries, got {weights.shape[0]}.")
    return weights


def _enabled_channels(discrete, enabled):
    if enabled is None:
        return np.flatnonzero(np.any(discrete.B_d != 0, axis=0))
    return np.asarray(enabled, dtype=int)


def _reference(x_ref, horizon, n_x):
    x_ref = np.asarray(x_ref, dtype=float)
    if x_ref.shape == (n_x,):
        x_ref = np.tile(x_ref, (horizon, 1))
    if x_ref.shape != (horizon, n_x):
        raise DimensionError(
            f"Reference must have shape ({n_x},) or ({horizon}, {n_x}), got "
            f"{x_ref.shape}.")
    return x_ref


def prediction_matrices(discrete: DiscreteModel, horizon: int, enabled):
    """
    Stacked prediction X = Phi x0 + Gamma U + offsets with
    X = [x1; ...; xN] and U = [U0; ...; U(N-1)] over the enabled channels.

    Returns
    -------
    * `Phi` [array, shape=(N n_x, n_x)]
    * `Gamma` [array, shape=(N n_x, N n_u)]
    * `offsets` [array, shape=(N n_x,)]
    """
    A = discrete.A_d
    B = discrete.B_d[:, enabled]
    n_x, n_u = A.shape[0], B.shape[1]
    powers = [np.eye(n_x)]
    for _ in range(horizon):
        powers.append(A @ powers[-1])
    AB = [power @ B for power in powers[:horizon]]
    Phi = np.vstack(powers[1:])
    Gamma = np.zeros((horizon * n_x, horizon * n_u))
    offsets = np.zeros(horizon * n_x)
    c = discrete.offset
    accumulated = np.zeros(n_x)
    for k in range(horizon):
        accumulated = A @ accumulated + c
        offsets[k * n_x:(k + 1) * n_x] = accumulated
        for j in range(k + 1):
            Gamma[k * n_x:(k + 1) * n_x, j * n_u:(j + 1) * n_u] = AB[k - j]
    return Phi, Gamma, offsets


def _rate_matrix(horizon, n_u, first_row):
    shift = np.eye(horizon) - np.eye(horizon, k=-1)
    if not first_row:
        shift[0, 0] = 0.0
    return np.kron(shift, np.eye(n_u))


def _input_terms(cfg, enabled, horizon, u_prev):
    """Quadratic and linear input cost terms (without the factor 2)."""
    n_u = len(enabled)
    R = _weights(cfg.input_weights, 8, "input_weights")[enabled]
    H = np.kron(np.eye(horizon), np.diag(R))
    f = np.zeros(horizon * n_u)
    if cfg.input_rate_weights is not None:
        S = _weights(cfg.input_rate_weights, 8, "input_rate_weights")[enabled]
        delta = _rate_matrix(horizon, n_u, u_prev is not None)
        H = H + delta.T @ np.kron(np.eye(horizon), np.diag(S)) @ delta
        if u_prev is not None:
            f[:n_u] -= S * np.asarray(u_prev, dtype=float)[enabled]
    return H, f


def _soft_scale(lower, upper):
    """Half-width of each two-sided soft row, 1 for one-sided or
    degenerate rows."""
    width = upper - lower
    scale = np.ones(len(lower))
    two_sided = np.isfinite(width) & (width > 0)
    scale[two_sided] = 0.5 * width[two_sided]
    return scale


def _split_constraints(constraints, enabled, n_x):
    """
    Soft rows, normalized to unit half-width so that one slack unit means
    the same relative violation on every row, and the hard input rows over
    the enabled channels.
    """
    if constraints is None:
        constraints = ConstraintSet.empty(n_x)
    if constraints.G_x.shape[1] != n_x:
        raise DimensionError(
            f"Constraint rows act on {constraints.G_x.shape[1]} states, the "
            f"model has {n_x}.")
    soft = constraints.soft
    scale = _soft_scale(constraints.lower[soft], constraints.upper[soft])
    G_soft_x = constraints.G_x[soft] / scale[:, None]
    G_soft_u = constraints.G_u[soft][:, enabled] / scale[:, None]
    lower_soft = constraints.lower[soft] / scale
    upper_soft = constraints.upper[soft] / scale
    hard = np.flatnonzero(~soft)
    G_hard = constraints.G_u[hard][:, enabled]
    # rows that only touch disabled channels are satisfied by U = 0
    keep = np.any(G_hard != 0, axis=1)
    if np.any(constraints.G_x[hard][keep] != 0):
        raise DimensionError("Hard constraint rows must not involve states.")
    return (G_soft_x, G_soft_u, lower_soft, upper_soft,
            G_hard[keep], constraints.lower[hard][keep],
            constraints.upper[hard][keep])


def _assemble(P_core, q_core, soft_block, soft_offset, soft_bounds,
              hard_block, hard_bounds, hard_stage_rows, cfg, n_core, meta):
    """
    Append the slack variable and stack all constraint rows: soft upper
    rows, soft lower rows, hard rows and the slack sign row. Each block is
    ordered by stage; `meta["stage_rows"]` records the rows per stage of
    every block.
    """
    lower_soft, upper_soft = soft_bounds
    has_slack = soft_block.shape[0] > 0
    n = n_core + int(has_slack)
    P = np.zeros((n, n))
    P[:n_core, :n_core] = P_core
    q = np.zeros(n)
    q[:n_core] = q_core
    rows, lower, upper = [], [], []
    if has_slack:
        P[-1, -1] = 2.0 * cfg.slack_weight
        q[-1] = cfg.slack_linear_weight
        n_soft = soft_block.shape[0]
        ones = np.ones((n_soft, 1))
        rows += [np.hstack([soft_block, -ones]), np.hstack([soft_block, ones])]
        lower += [np.full(n_soft, -np.inf), lower_soft - soft_offset]
        upper += [upper_soft - soft_offset, np.full(n_soft, np.inf)]
    if hard_block.shape[0]:
        rows.append(np.hstack([hard_block, np.zeros((hard_block.shape[0], n - n_core))]))
        lower.append(hard_bounds[0])
        upper.append(hard_bounds[1])
    if has_slack:
        slack_row = np.zeros((1, n))
        slack_row[0, -1] = 1.0
        rows.append(slack_row)
        lower.append([0.0])
        upper.append([np.inf])
    A = np.vstack(rows) if rows else np.zeros((0, n))
    meta["has_slack"] = has_slack
    n_soft = soft_block.shape[0] // meta["horizon"] if has_slack else 0
    meta["stage_rows"] = [n_soft, n_soft] * int(has_slack) + list(hard_stage_rows)
    return QuadraticProgram(
        0.5 * (P + P.T), q, A,
        np.concatenate(lower) if lower else np.zeros(0),
        np.concatenate(upper) if upper else np.zeros(0),
        meta=meta,
    )


def build_cftoc(discrete: DiscreteModel, x0, x_ref, constraints: ConstraintSet,
                cfg, enabled=None, u_prev=None) -> QuadraticProgram:
    """
    Condensed quadratic program of one horizon.

    Parameters
    ----------
    * `discrete` [DiscreteModel]

    * `x0` [array, shape=(n_x,)]:
        Initial state.

    * `x_ref` [array, shape=(n_x,) or (N, n_x)]:
        Desired state, held over the horizon if one-dimensional.

    * `constraints` [ConstraintSet or None]:
        Rows of one step; soft rows are applied to (x1, U0)..(xN, U(N-1)),
        hard rows to U0..U(N-1).

    * `cfg` [MpcConfig]:
        Horizon, weights and slack penalties.

    * `enabled` [array of int, optional]:
        Control channels that are decision variables. Defaults to the
        nonzero columns of `discrete.B_d`.

    * `u_prev` [array, shape=(8,), optional]:
        Previous input relative to the current command, penalized against
        U0 by the rate weights.

    Returns
    -------
    * `qp` [QuadraticProgram]:
        Variables [U0, ..., U(N-1), s] with the slack only present when
        there are soft rows. `qp.meta` holds the prediction data.
    """
    n_x = discrete.n_x
    horizon = int(cfg.horizon)
    enabled = _enabled_channels(discrete, enabled)
    n_u = len(enabled)
    x0 = _weights(x0, n_x, "x0")
    x_ref = _reference(x_ref, horizon, n_x)
    Q = _weights(cfg.state_weights, n_x, "state_weights")

    Phi, Gamma, offsets = prediction_matrices(discrete, horizon, enabled)
    free = Phi @ x0 + offsets
    Q_bar = np.kron(np.eye(horizon), np.diag(Q))
    H_u, f_u = _input_terms(cfg, enabled, horizon, u_prev)
    GQ = Gamma.T @ Q_bar
    P_core = 2.0 * (GQ @ Gamma + H_u)
    q_core = 2.0 * (GQ @ (free - x_ref.ravel()) + f_u)

    (G_soft_x, G_soft_u, lower_soft, upper_soft,
     G_hard, lower_hard, upper_hard) = _split_constraints(constraints, enabled, n_x)
    G_bar = np.kron(np.eye(horizon), G_soft_x)
    soft_block = G_bar @ Gamma + np.kron(np.eye(horizon), G_soft_u)
    soft_offset = G_bar @ free
    hard_block = np.kron(np.eye(horizon), G_hard)
    meta = {
        "formulation": "condensed",
        "horizon": horizon,
        "enabled": enabled,
        "n_u": n_u,
        "n_x": n_x,
        "free": free.reshape(horizon, n_x),
        "x_ref": x_ref,
    }
    return _assemble(
        P_core, q_core, soft_block, soft_offset,
        (np.tile(lower_soft, horizon), np.tile(upper_soft, horizon)),
        hard_block, (np.tile(lower_hard, horizon), np.tile(upper_hard, horizon)),
        [G_hard.shape[0]], cfg, horizon * n_u, meta)


def build_sparse_cftoc(discrete: DiscreteModel, x0, x_ref,
                       constraints: ConstraintSet, cfg, enabled=None,
                       u_prev=None) -> QuadraticProgram:
    """
    Same problem as `build_cftoc` with the predicted states kept as
    variables, ordered [x1, ..., xN, U0, ..., U(N-1), s], and the dynamics
    as equality rows.
    """
    n_x = discrete.n_x
    horizon = int(cfg.horizon)
    enabled = _enabled_channels(discrete, enabled)
    n_u = len(enabled)
    x0 = _weights(x0, n_x, "x0")
    x_ref = _reference(x_ref, horizon, n_x)
    Q = _weights(cfg.state_weights, n_x, "state_weights")
    A_d, B_d = discrete.A_d, discrete.B_d[:, enabled]
    n_states, n_inputs = horizon * n_x, horizon * n_u

    Q_bar = np.kron(np.eye(horizon), np.diag(Q))
    H_u, f_u = _input_terms(cfg, enabled, horizon, u_prev)
    P_core = np.zeros((n_states + n_inputs,) * 2)
    P_core[:n_states, :n_states] = 2.0 * Q_bar
    P_core[n_states:, n_states:] = 2.0 * H_u
    q_core = np.concatenate([-2.0 * Q_bar @ x_ref.ravel(), 2.0 * f_u])

    dynamics = np.hstack([
        np.eye(n_states) - np.kron(np.eye(horizon, k=-1), A_d),
        -np.kron(np.eye(horizon), B_d),
    ])
    rhs = np.tile(discrete.offset, horizon)
    rhs[:n_x] += A_d @ x0

    (G_soft_x, G_soft_u, lower_soft, upper_soft,
     G_hard, lower_hard, upper_hard) = _split_constraints(constraints, enabled, n_x)
    soft_block = np.hstack([np.kron(np.eye(horizon), G_soft_x),
                            np.kron(np.eye(horizon), G_soft_u)])
    hard_block = np.hstack([np.zeros((horizon * G_hard.shape[0], n_states)),
                            np.kron(np.eye(horizon), G_hard)])
    hard_block = np.vstack([dynamics, hard_block])
    hard_lower = np.concatenate([rhs, np.tile(lower_hard, horizon)])
    hard_upper = np.concatenate([rhs, np.tile(upper_hard, horizon)])
    meta = {
        "formulation": "sparse",
        "horizon": horizon,
        "enabled": enabled,
        "n_u": n_u,
        "n_x": n_x,
        "x_ref": x_ref,
    }
    return _assemble(
        P_core, q_core, soft_block, np.zeros(soft_block.shape[0]),
        (np.tile(lower_soft, horizon), np.tile(upper_soft, horizon)),
        hard_block, (hard_lower, hard_upper), [n_x, G_hard.shape[0]], cfg,
        n_states + n_inputs, meta)


def extract_inputs(x, meta):
    """
    Control sequence and slack from a solution vector.

    Returns
    -------
    * `U` [array, shape=(N, 8)]:
        Zero on disabled channels.

    * `slack` [float]
    """
    x = np.asarray(x, dtype=float)
    horizon, n_u = meta["horizon"], meta["n_u"]
    start = horizon * meta["n_x"] if meta["formulation"] == "sparse" else 0
    U = np.zeros((horizon, 8))
    U[:, meta["enabled"]] = x[start:start + horizon * n_u].reshape(horizon, n_u)
    slack = float(x[-1]) if meta.get("has_slack") else 0.0
    return U, slack


def predict_states(discrete: DiscreteModel, x0, U) -> np.ndarray:
    """States x1..xN under the control sequence U of shape (N, 8)."""
    states = []
    x = np.asarray(x0, dtype=float)
    for U_k in np.atleast_2d(U):
        x = discrete.step(x, U_k)
        states.append(x)
    return np.array(states)
