"""dB <-> linear conversions. Everything else in the package stores linear values."""
import numpy as np


def db_to_linear(db):
    """Convert a power ratio in dB to linear scale (scalars stay scalars)."""
    out = np.power(10.0, np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(value):
    """Convert a linear power ratio to dB; zero maps to -inf."""
    value = np.asarray(value, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(value)
    return float(out) if out.ndim == 0 else out
