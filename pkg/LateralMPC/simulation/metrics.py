"""Closed-loop traces and their summary statistics."""
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from scipy.optimize import OptimizeResult

from ..reference import CheckpointSchedule
from ..vehicle.models import LATERAL_INDEX, N_STATES
from ..vehicle.params import GRAVITY, ModelKind

STATE_NAMES = {
    ModelKind.GENERAL_EV: ("v", "r", "phi", "phi_dot",
                           "omega1", "omega2", "omega3", "omega4"),
    ModelKind.VHS: ("y", "v_y", "r", "phi", "phi_dot"),
}
LEFT_WHEELS = [0, 2]
RIGHT_WHEELS = [1, 3]


def _channel_names(prefix_q, prefix_d):
    names = []
    for i in range(1, 5):
        names += [f"{prefix_q}{i}", f"{prefix_d}{i}"]
    return names


@dataclass
class SimTrace:
    """
    Per-step log of a closed-loop run. Row k holds the plant state at the
    start of sample k and what was applied during it.

    Attributes
    ----------
    * `time`, `x_world`, `psi` [array, shape=(M,)]
    * `states` [array, shape=(M, n_x)]
    * `commands` [array, shape=(M, 8)]: applied command W + U.
    * `deltas` [array, shape=(M, 8)]: applied control delta U.
    * `alpha` [array, shape=(M, 4)]: plant slip angles.
    * `f_z` [array, shape=(M, 4)]: normal loads before wheel-lift clipping.
    * `ri` [array, shape=(M,)]: rollover index.
    * `status` [array, shape=(M,)]: QP status code, 0 if the solver raised.
    * `solve_ms` [array, shape=(M,)]
    * `slack` [array, shape=(M,)]
    * `metadata` [dict]: scenario name, model kind and run settings.
    """
    model_kind: ModelKind
    time: np.ndarray
    x_world: np.ndarray
    psi: np.ndarray
    states: np.ndarray
    commands: np.ndarray
    deltas: np.ndarray
    alpha: np.ndarray
    f_z: np.ndarray
    ri: np.ndarray
    status: np.ndarray
    solve_ms: np.ndarray
    slack: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_steps(self):
        return len(self.time)

    @property
    def lateral_position(self):
        """World lateral coordinate, racing model only."""
        if self.model_kind != ModelKind.VHS:
            raise AttributeError("The general vehicle does not track position.")
        return self.states[:, 0]

    @property
    def yaw_rate(self):
        return self.states[:, LATERAL_INDEX[self.model_kind] + 1]

    def columns(self) -> List[str]:
        return (["time", "x_world", "psi"]
                + list(STATE_NAMES[self.model_kind])
                + _channel_names("Q", "delta")
                + _channel_names("dQ", "ddelta")
                + [f"alpha{i}" for i in range(1, 5)]
                + [f"fz{i}" for i in range(1, 5)]
                + ["ri", "status", "solve_ms", "slack"])

    def as_array(self) -> np.ndarray:
        return np.column_stack([
            self.time, self.x_world, self.psi, self.states, self.commands,
            self.deltas, self.alpha, self.f_z, self.ri, self.status,
            self.solve_ms, self.slack,
        ])

    def to_csv(self, path):
        """Write the trace with a header row in `columns()` order."""
        np.savetxt(path, self.as_array(), delimiter=",",
                   header=",".join(self.columns()), comments="", fmt="%.10g")


class TraceRecorder(object):
    """Collects the rows of a `SimTrace` while a run is in progress."""

    def __init__(self, model_kind, metadata=None):
        self.model_kind = ModelKind.parse(model_kind)
        self.metadata = dict(metadata or {})
        self.rows = []

    def __len__(self):
        return len(self.rows)

    def append(self, **row):
        self.rows.append(row)

    def to_trace(self) -> SimTrace:
        n_x = N_STATES[self.model_kind]

        def stack(key, width=None):
            if not self.rows:
                shape = (0,) if width is None else (0, width)
                return np.zeros(shape)
            return np.array([row[key] for row in self.rows], dtype=float)

        return SimTrace(
            model_kind=self.model_kind,
            time=stack("time"),
            x_world=stack("x_world"),
            psi=stack("psi"),
            states=stack("state", n_x),
            commands=stack("command", 8),
            deltas=stack("delta", 8),
            alpha=stack("alpha", 4),
            f_z=stack("f_z", 4),
            ri=stack("ri"),
            status=stack("status").astype(int),
            solve_ms=stack("solve_ms"),
            slack=stack("slack"),
            metadata=dict(self.metadata),
        )


def lateral_targets(trace: SimTrace, scenario=None) -> np.ndarray:
    """Lateral target of every row: the active checkpoint's y, or zero
    without checkpoints."""
    if scenario is None or scenario.checkpoints is None:
        return np.zeros(trace.n_steps)
    schedule = CheckpointSchedule(scenario.checkpoints, scenario.lookahead,
                                  scenario.min_distance)
    return np.array([schedule.lateral_target(x) for x in trace.x_world])


def metrics(trace: SimTrace, scenario=None, params=None) -> OptimizeResult:
    """
    Summary of a closed-loop run.

    Parameters
    ----------
    * `trace` [SimTrace]

    * `scenario` [Scenario, optional]:
        Supplies the checkpoints for the lateral error.

    * `params` [GeneralEvParams or VhsParams, optional]:
        Supplies the limits for the violation counts.

    Returns
    -------
    * `report` [`OptimizeResult`, scipy object]:
        `max_lateral_error` and `mean_lateral_error` (racing model, zero
        otherwise), `max_abs_alpha`, `max_abs_ri`, `mean_load_left_minus_right`,
        `mean_solve_ms`, `p95_solve_ms`, `max_solve_ms`, `max_slack`,
        `violations` (row family -> number of samples), `n_degraded` and
        `n_steps`.
    """
    report = OptimizeResult()
    report.n_steps = trace.n_steps
    if trace.model_kind == ModelKind.VHS and trace.n_steps:
        error = np.abs(trace.lateral_position - lateral_targets(trace, scenario))
        report.max_lateral_error = float(error.max())
        report.mean_lateral_error = float(error.mean())
    else:
        report.max_lateral_error = 0.0
        report.mean_lateral_error = 0.0

    def peak(values):
        return float(np.max(np.abs(values))) if np.size(values) else 0.0

    report.max_abs_alpha = peak(trace.alpha)
    report.max_abs_ri = peak(trace.ri)
    if trace.n_steps:
        left = trace.f_z[:, LEFT_WHEELS].sum(axis=1)
        right = trace.f_z[:, RIGHT_WHEELS].sum(axis=1)
        report.mean_load_left_minus_right = float(np.mean(left - right))
        report.mean_solve_ms = float(np.mean(trace.solve_ms))
        report.p95_solve_ms = float(np.percentile(trace.solve_ms, 95))
        report.max_solve_ms = float(np.max(trace.solve_ms))
    else:
        report.mean_load_left_minus_right = 0.0
        report.mean_solve_ms = report.p95_solve_ms = report.max_solve_ms = 0.0
    report.max_slack = peak(trace.slack)
    report.n_degraded = int(np.sum(trace.status != 1))

    violations = {}
    if params is not None and trace.n_steps:
        violations["rear_slip"] = int(np.sum(np.abs(trace.alpha[:, 2:]).max(axis=1)
                                             > params.alpha_r_max))
        violations["front_slip"] = int(np.sum(np.abs(trace.alpha[:, :2]).max(axis=1)
                                              > params.alpha_r_max))
        ri_limit = params.ri_c if trace.model_kind == ModelKind.GENERAL_EV else 1.0
        violations["rollover_index"] = int(np.sum(np.abs(trace.ri) > ri_limit))
        r_max = params.tire.mu_y * GRAVITY / trace.metadata.get("u", np.inf)
        violations["yaw_rate"] = int(np.sum(np.abs(trace.yaw_rate) > r_max))
    report.violations = violations
    return report
