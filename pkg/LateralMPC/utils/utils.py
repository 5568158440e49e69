import joblib

__all__ = (
    "load",
    "dump",
    "eval_callbacks",
)


def eval_callbacks(callbacks, result):
    """Run every callback on the record of the step that just finished.

    Parameters
    ----------
    * `callbacks` [list of callables]

    * `result` [`OptimizeResult`, scipy object]:
        Step record passed unchanged to each callback.

    Returns
    -------
    * `decision` [bool]:
        True as soon as one callback returned True. A callback returning
        None abstains.
    """
    stop = False
    for callback in callbacks or ():
        if callback(result):
            stop = True
    return stop


def dump(res, filename, **kwargs):
    """
    Persist a QP solution, a controller step record or a simulation trace.

    Parameters
    ----------
    * `res` [object]:
        Any picklable object, typically an `OptimizeResult` or `SimTrace`.

    * `filename` [str or `pathlib.Path`]:
        Target file. Extensions such as `.gz` or `.xz` select joblib's
        matching compressor.

    * `**kwargs`:
        Forwarded to `joblib.dump`, e.g. `compress=3`.
    """
    joblib.dump(res, filename, **kwargs)


def load(filename, **kwargs):
    """
    Read back an object written with `LateralMPC.dump`.

    Parameters
    ----------
    * `filename` [str or `pathlib.Path`]

    * `**kwargs`:
        Forwarded to `joblib.load`.

    Returns
    -------
    * `res`:
        The stored object.
    """
    return joblib.load(filename, **kwargs)
