"""Progress lines and wall-clock timing for the sweeps.

Everything goes through log(), so --quiet and the tests silence it by
setting VERBOSE to False. Timings only ever reach stdout, never the CSV or
manifest files, which stay byte-identical across runs.
"""
import functools
import time
from contextlib import contextmanager

VERBOSE = True


def log(message):
    """Print one progress line unless logging is switched off."""
    if VERBOSE:
        print(message, flush=True)


@contextmanager
def stopwatch():
    """Yield a callable returning the seconds spent in the block; it stops at exit."""
    start = time.perf_counter()
    stop = []
    yield lambda: (stop[0] if stop else time.perf_counter()) - start
    stop.append(time.perf_counter())


def time_execution(label=None):
    """
    Decorator logging "<label>..." before a sweep and "<label>: N.NN seconds" after it.

    Args:
        label (str, optional): prefix of both lines; defaults to the function name

    Nothing is logged after a call that raises; main reports the failure.
    """
    def decorator(func):
        prefix = label or f"Executing {func.__name__}"

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            log(f"{prefix}...")
            with stopwatch() as elapsed:
                result = func(*args, **kwargs)
            log(f"{prefix}: {elapsed():.2f} seconds")
            return result
        return wrapper
    return decorator
