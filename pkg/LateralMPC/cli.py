"""Command-line front end.

    lateral-mpc simulate general_ev_step_steer vhs_overtake_banked -o out/
    lateral-mpc benchmark --repetitions 500
    lateral-mpc inspect dallara_av21 --state 0,0.5,0.1,0,0 --steering 0.02
    lateral-mpc sweep vhs_overtake_flat --speeds 30 45 55

Exit codes: 0 on success, 1 for configuration errors (missing or invalid
files, unknown override keys), 2 for failures while running.
"""
import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .exceptions import ConfigurationError
from .simulation import load_scenario, metrics, run_scenario, save_scenario, sweep_speeds
from .simulation.runner import DEFAULT_SWEEP_SPEEDS
from .utils.config import preset_path, write_yaml
from .vehicle import (ActuatorConfig, ModelKind, N_STATES, assemble,
                      load_vehicle, operating_point, save_vehicle)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

DEFAULT_SCENARIOS = (
    "general_ev_step_steer",
    "vhs_overtake_flat",
    "vhs_overtake_banked",
    "vhs_overtake_model_err",
)
BENCHMARK_SCENARIOS = ("general_ev_step_steer", "vhs_overtake_flat")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a sub-command needs besides its own flags.

    Parameters
    ----------
    * `scenarios` [tuple of str]:
        Scenario files or bundled preset names.

    * `vehicle` [str, optional]:
        Vehicle file or preset name; replaces each scenario's vehicle.

    * `output_dir` [Path, optional]

    * `overrides` [tuple of str]:
        `section.key=value` strings.

    * `repetitions` [int, default=500]:
        Closed-loop steps per model kind in benchmark mode.

    * `n_jobs` [int, default=1]:
        Scenarios run in parallel.
    """
    scenarios: Tuple[str, ...] = ()
    vehicle: Optional[str] = None
    output_dir: Optional[Path] = None
    overrides: Tuple[str, ...] = ()
    repetitions: int = 500
    n_jobs: int = 1

    def __post_init__(self):
        for name in self.scenarios:
            preset_path(name)
        if self.vehicle is not None:
            preset_path(self.vehicle)
        if int(self.repetitions) < 1:
            raise ConfigurationError(
                f"repetitions must be at least 1, got {self.repetitions}.")
        if int(self.n_jobs) == 0:
            raise ConfigurationError("n_jobs must not be 0.")

    def load(self):
        """Load every scenario with its controller tuning and vehicle.
        Nothing is written before all of them validate."""
        runs = []
        for name in self.scenarios:
            scenario, config, params = load_scenario(name, self.overrides)
            if self.vehicle is not None:
                vehicle_overrides = [o for o in self.overrides
                                     if o.split(".", 1)[0] in ("vehicle", "tire")]
                params = load_vehicle(self.vehicle, overrides=vehicle_overrides)
                if params.model_kind != scenario.kind:
                    raise ConfigurationError(
                        f"Vehicle \"{self.vehicle}\" does not fit scenario "
                        f"\"{scenario.name}\".")
            runs.append((scenario, config, params))
        return runs


def _run_one(scenario, config, params):
    trace = run_scenario(scenario, config, params)
    return trace, metrics(trace, scenario, params)


def cmd_simulate(run: RunConfig) -> int:
    """Run scenarios, write one CSV trace each, the resolved configuration
    and a `metrics.yaml` summary."""
    runs = run.load()
    out = Path(run.output_dir or ".")
    results = Parallel(n_jobs=run.n_jobs)(
        delayed(_run_one)(scenario, config, params)
        for scenario, config, params in runs)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for (scenario, config, params), (trace, report) in zip(runs, results):
        trace.to_csv(out / f"{scenario.name}.csv")
        vehicle_file = f"{scenario.name}.vehicle.yaml"
        save_vehicle(params, out / vehicle_file)
        resolved = scenario.from_dict({**scenario.to_dict(), "vehicle": vehicle_file})
        save_scenario(resolved, out / f"{scenario.name}.scenario.yaml", config)
        summary[scenario.name] = dict(report)
        print("%s: %d steps, max |alpha| %.4f rad, max lateral error %.3f m, "
              "mean solve %.2f ms"
              % (scenario.name, report.n_steps, report.max_abs_alpha,
                 report.max_lateral_error, report.mean_solve_ms))
    write_yaml(summary, out / "metrics.yaml")
    return EXIT_OK


def cmd_benchmark(run: RunConfig) -> int:
    """Closed-loop solve-time statistics over `repetitions` warm-started
    steps per scenario."""
    names = run.scenarios or BENCHMARK_SCENARIOS
    bench = RunConfig(scenarios=tuple(names), vehicle=run.vehicle,
                      overrides=tuple(run.overrides)
                      + (f"scenario.steps={run.repetitions}",))
    timings = {}
    for scenario, config, params in bench.load():
        trace = run_scenario(scenario, config, params)
        solve_ms = trace.solve_ms
        timings[scenario.name] = {
            "model_kind": scenario.model_kind,
            "horizon": config.horizon,
            "steps": int(trace.n_steps),
            "mean_ms": float(np.mean(solve_ms)),
            "p95_ms": float(np.percentile(solve_ms, 95)),
            "max_ms": float(np.max(solve_ms)),
            "sample_time_ms": 1e3 * config.sample_time,
        }
        print("%s (N=%d): mean %.2f ms, p95 %.2f ms, max %.2f ms over %d steps"
              % (scenario.name, config.horizon, timings[scenario.name]["mean_ms"],
                 timings[scenario.name]["p95_ms"], timings[scenario.name]["max_ms"],
                 trace.n_steps))
    if run.output_dir is not None:
        Path(run.output_dir).mkdir(parents=True, exist_ok=True)
        write_yaml(timings, Path(run.output_dir) / "benchmark.yaml")
    return EXIT_OK


def _parse_vector(text, size, name):
    try:
        values = [float(v) for v in text.split(",")] if text else [0.0] * size
    except ValueError:
        raise ConfigurationError(f"{name} must be comma-separated numbers, got \"{text}\".")
    if len(values) != size:
        raise ConfigurationError(f"{name} needs {size} values, got {len(values)}.")
    return np.array(values)


def _write_matrix(name, matrix, out):
    matrix = np.atleast_2d(matrix)
    if out is None:
        print(f"{name} {matrix.shape[0]} {matrix.shape[1]}")
        np.savetxt(sys.stdout, matrix, fmt="%.17g")
    else:
        np.savetxt(Path(out) / f"{name}.txt", matrix, fmt="%.17g")


def cmd_inspect(run: RunConfig, state=None, steering=0.0, speed=None,
                phi_r=0.0, actuators=None) -> int:
    """Print the tire linearization of every wheel and dump A, B, E, D and
    C_phi as dense text matrices."""
    if run.vehicle is None:
        raise ConfigurationError("inspect needs a vehicle file.")
    overrides = [o for o in run.overrides if o.split(".", 1)[0] != "scenario"]
    params = load_vehicle(run.vehicle, overrides=overrides)
    kind = params.model_kind
    x = _parse_vector(state, N_STATES[kind], "state")
    if speed is None:
        speed = 80 / 3.6 if kind == ModelKind.GENERAL_EV else 50.0
    T_w = ActuatorConfig.from_name(actuators or (
        "vhs" if kind == ModelKind.VHS else "torque_vectoring"))
    W0 = np.zeros(8)
    W0[1] = W0[3] = steering
    _, f_z, _, lin = operating_point(x, W0, params, speed, phi_r=phi_r)
    model = assemble(params, speed, lin, W0, T_w, phi_r=phi_r)
    for i, (wheel, load) in enumerate(zip(lin, f_z), 1):
        print("wheel %d: alpha_bar=%.6g rad, f_z=%.6g N, f_y_bar=%.6g N, "
              "c_alpha_tilde=%.6g N/rad"
              % (i, wheel.alpha_bar, load, wheel.f_y_bar, wheel.c_alpha_tilde))
    out = run.output_dir
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
    for name in ("A", "B", "E", "D"):
        _write_matrix(name, getattr(model, name), out)
    if model.C_phi is not None:
        _write_matrix("C_phi", model.C_phi, out)
    return EXIT_OK


def cmd_sweep(run: RunConfig, speeds=DEFAULT_SWEEP_SPEEDS) -> int:
    """Rerun each scenario at several speeds and report the maximum
    lateral error per speed."""
    summary = {}
    for scenario, config, params in run.load():
        report = sweep_speeds(scenario, config, params, speeds, n_jobs=run.n_jobs)
        summary[scenario.name] = {
            float(s): float(e) for s, e in zip(report.speeds, report.max_lateral_error)}
        for s, e in summary[scenario.name].items():
            print("%s at %.1f m/s: max lateral error %.3f m" % (scenario.name, s, e))
    if run.output_dir is not None:
        Path(run.output_dir).mkdir(parents=True, exist_ok=True)
        write_yaml(summary, Path(run.output_dir) / "sweep.yaml")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lateral-mpc",
        description="Lateral-stability MPC: closed-loop simulation, solver "
                    "benchmark and model inspection.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-step solver output.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenarios=True):
        if scenarios:
            p.add_argument("scenarios", nargs="*",
                           help="Scenario files or bundled preset names.")
        p.add_argument("--vehicle", default=None,
                       help="Vehicle file or preset replacing the scenario's.")
        p.add_argument("-o", "--output-dir", type=Path, default=None)
        p.add_argument("-s", "--set", dest="overrides", action="append",
                       default=[], metavar="SECTION.KEY=VALUE",
                       help="Override a configuration value. Repeatable.")
        p.add_argument("--parallel", type=int, default=1, metavar="N_JOBS",
                       help="Run scenarios in parallel with joblib.")

    common(sub.add_parser("simulate", help="Run closed-loop scenarios."))
    bench = sub.add_parser("benchmark", help="Time warm-started solves.")
    common(bench)
    bench.add_argument("--repetitions", type=int, default=500)
    inspect = sub.add_parser("inspect", help="Print a linearized model.")
    common(inspect, scenarios=False)
    inspect.add_argument("vehicle_file", nargs="?", default=None)
    inspect.add_argument("--state", default=None,
                         help="Comma-separated model state, zeros by default.")
    inspect.add_argument("--steering", type=float, default=0.0)
    inspect.add_argument("--speed", type=float, default=None)
    inspect.add_argument("--phi-r", type=float, default=0.0)
    inspect.add_argument("--actuators", default=None)
    sweep = sub.add_parser("sweep", help="Rerun scenarios at several speeds.")
    common(sweep)
    sweep.add_argument("--speeds", type=float, nargs="+",
                       default=list(DEFAULT_SWEEP_SPEEDS))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    try:
        vehicle = args.vehicle
        if args.command == "inspect":
            vehicle = args.vehicle_file or args.vehicle
        scenarios = tuple(getattr(args, "scenarios", ()) or ())
        if args.command == "simulate" and not scenarios:
            scenarios = DEFAULT_SCENARIOS
        run = RunConfig(
            scenarios=scenarios,
            vehicle=vehicle,
            output_dir=args.output_dir,
            overrides=tuple(args.overrides),
            repetitions=getattr(args, "repetitions", 500),
            n_jobs=args.parallel,
        )
        if args.command == "simulate":
            return cmd_simulate(run)
        if args.command == "benchmark":
            return cmd_benchmark(run)
        if args.command == "inspect":
            return cmd_inspect(run, args.state, args.steering, args.speed,
                               args.phi_r, args.actuators)
        return cmd_sweep(run, args.speeds)
    except ConfigurationError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as error:
        logger.debug("Run failed", exc_info=True)
        print(f"error: {type(error).__name__}: {error}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
