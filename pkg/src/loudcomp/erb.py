"""ERB-rate scale (Glasberg & Moore 1990)."""
import numpy as np


def _check(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    return f


def erb_number(f):
    """ERB-number in Cam of frequency ``f`` in Hz."""
    out = 21.4 * np.log10(0.00437 * _check(f) + 1.0)
    return float(out) if out.ndim == 0 else out


def erb_number_to_hz(cam):
    out = (10.0 ** (np.asarray(cam, dtype=float) / 21.4) - 1.0) / 0.00437
    return float(out) if out.ndim == 0 else out


def erb_bandwidth(f):
    """Equivalent rectangular bandwidth in Hz of the auditory filter at ``f``."""
    out = 24.7 * (4.37 * _check(f) / 1000.0 + 1.0)
    return float(out) if out.ndim == 0 else out
