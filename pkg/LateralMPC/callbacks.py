"""Monitor and influence closed-loop runs via callbacks.

Callbacks are callables which are invoked after every closed-loop step and
are passed the step record of the controller, extended with `step` (index
of the sample), `n_steps`, `time` and `trace` (the `TraceRecorder` of the
run). Callbacks can monitor progress, or stop the run early by returning
`True`.

Monitoring callbacks
--------------------
* VerboseCallback
* TimerCallback
* CheckpointSaver

Early stopping callbacks
------------------------
* DeadlineStopper
* SolveTimeStopper
"""
from time import time

from .exceptions import ConfigurationError
from .utils import dump


def check_callback(callback):
    """Normalise `callback` (None, one callable or a sequence of them) to a
    list."""
    if callback is None:
        return []
    if callable(callback):
        return [callback]
    if isinstance(callback, (list, tuple)) and all(map(callable, callback)):
        return list(callback)
    raise ConfigurationError(
        f"callbacks must be a callable or a list of callables, got {callback!r}.")


class VerboseCallback(object):
    """
    Print the outcome of every `every`-th step.

    Parameters
    ----------
    * `n_total` [int]:
        Number of steps of the run.

    * `every` [int, default=1]
    """

    def __init__(self, n_total, every=1):
        self.n_total = n_total
        self.every = max(int(every), 1)
        self._start_time = time()

    def __call__(self, res):
        """
        Parameters
        ----------
        * `res` [`OptimizeResult`, scipy object]:
            The step record.
        """
        step = res.step + 1
        if step % self.every and step != self.n_total:
            return
        time_taken = time() - self._start_time
        print("Step %d/%d at t=%.2f s: %s, solve %.2f ms, slack %.3g, "
              "wall time %.3f s"
              % (step, self.n_total, res.time, res.status.name,
                 1e3 * res.solve_time, res.slack, time_taken))
        self._start_time = time()


class TimerCallback(object):
    """
    Record the wall time between consecutive steps.

    Attributes
    ----------
    * `iter_time` [list of float]:
        Seconds spent on each step, plant integration included.
    """
    def __init__(self):
        self._last = time()
        self.iter_time = []

    def __call__(self, res):
        now = time()
        self.iter_time.append(now - self._last)
        self._last = now


class EarlyStopper(object):
    """Base class of callbacks that end a run early.

    Subclasses implement `_criterion(result)` returning True to stop,
    False to continue, or None when they cannot tell yet.
    """
    def __call__(self, result):
        return self._criterion(result)

    def _criterion(self, result):
        raise NotImplementedError(
            f"{type(self).__name__} must implement _criterion.")


class DeadlineStopper(EarlyStopper):
    """
    Stop when the wall-time budget would not cover another step as long
    as the slowest one so far.

    Parameters
    ----------
    * `total_time` [float]:
        Budget of the whole run in seconds.

    Attributes
    ----------
    * `iter_time` [list of float]:
        Seconds spent on each step.
    """
    def __init__(self, total_time):
        super().__init__()
        self.total_time = total_time
        self.iter_time = []
        self._last = time()

    def _criterion(self, result):
        now = time()
        self.iter_time.append(now - self._last)
        self._last = now
        remaining = self.total_time - sum(self.iter_time)
        return remaining <= max(self.iter_time)


class SolveTimeStopper(EarlyStopper):
    """
    Stop as soon as a QP solve takes longer than the sample time, i.e.
    the controller would miss its deadline on the vehicle.

    Parameters
    ----------
    * `sample_time` [float]:
        Budget of one solve in seconds.

    Attributes
    ----------
    * `overrun_step` [int or None]:
        Step at which the budget was first exceeded.
    """
    def __init__(self, sample_time):
        super().__init__()
        self.sample_time = sample_time
        self.overrun_step = None

    def _criterion(self, result):
        if result.solve_time > self.sample_time:
            self.overrun_step = result.step
            return True
        return False


class CheckpointSaver(object):
    """
    Dump the trace recorded so far after every `every`-th step and after
    the last one, so an interrupted run can be inspected.

        saver = CheckpointSaver("./trace.pkl", every=50, compress=3)
        run_scenario(scenario, config, params, callbacks=[saver])
        trace = LateralMPC.load("./trace.pkl")

    Parameters
    ----------
    * `checkpoint_path` [str or Path]

    * `every` [int, default=1]

    * `**dump_options`:
        Forwarded to `LateralMPC.dump`.
    """
    def __init__(self, checkpoint_path, every=1, **dump_options):
        self.path = checkpoint_path
        self.every = max(int(every), 1)
        self.options = dump_options

    def __call__(self, res):
        done = res.step + 1
        if done % self.every == 0 or done == res.n_steps:
            dump(res.trace.to_trace(), self.path, **self.options)
