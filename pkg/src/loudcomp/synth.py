"""Deterministic speech-like test material (voiced formants, fricatives, pauses)."""
from __future__ import annotations

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

# (F1, F2, F3) in Hz for a handful of vowels
_VOWELS = ((730, 1090, 2440), (270, 2290, 3010), (530, 1840, 2480),
           (570, 840, 2410), (300, 870, 2240), (640, 1190, 2390))


def _resonator(x, f, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    a = [1.0, -2.0 * r * np.cos(2 * np.pi * f / fs), r * r]
    return lfilter([1.0 - r], a, x)


def _voiced(n, fs, rng):
    f0 = rng.uniform(95, 210) * np.linspace(1.0, rng.uniform(0.8, 1.2), n)
    phase = np.cumsum(f0 / fs)
    src = np.diff(np.floor(phase), prepend=0.0)  # one impulse per period
    src = lfilter([1.0], [1.0, -0.97], src)  # glottal low-pass tilt
    formants = _VOWELS[rng.integers(len(_VOWELS))]
    y = sum(_resonator(src, f, 60 + 0.05 * f, fs) * g for f, g in zip(formants, (1.0, 0.5, 0.25)))
    env = np.sin(np.pi * np.arange(n) / n) ** 0.5
    return y * env


def _fricative(n, fs, rng):
    lo = rng.uniform(2500, 4500)
    hi = min(rng.uniform(7000, 10000), 0.45 * fs)
    sos = butter(4, [lo, hi], btype="band", fs=fs, output="sos")
    env = np.hanning(n)
    return sosfilt(sos, rng.standard_normal(n)) * env * 0.04


def speechlike(duration: float, sample_rate: float = 22050, seed: int = 0, rms_dbfs: float = -23.0) -> np.ndarray:
    """Syllable-rate sequence of vowels, fricatives and short pauses.

    Normalized to ``rms_dbfs`` (dB re full-scale amplitude 1).
    """
    rng = np.random.default_rng(seed)
    n_total = int(round(duration * sample_rate))
    out = np.zeros(n_total)
    pos = int(0.05 * sample_rate)
    while pos < n_total:
        kind = rng.choice(3, p=[0.6, 0.25, 0.15])
        n = int(rng.uniform(0.08, 0.25) * sample_rate)
        n = min(n, n_total - pos)
        if n <= 16:
            break
        if kind == 0:
            out[pos:pos + n] += _voiced(n, sample_rate, rng)
        elif kind == 1:
            out[pos:pos + n] += _fricative(n, sample_rate, rng)
        pos += n
    rms = np.sqrt(np.mean(out**2))
    if rms > 0:
        out *= 10.0 ** (rms_dbfs / 20.0) / rms
    return out
