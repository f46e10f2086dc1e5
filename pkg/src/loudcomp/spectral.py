"""Windowing, one-sided power and ERB-band bookkeeping shared by the engine."""
from __future__ import annotations

import numpy as np

from loudcomp.erb import erb_bandwidth

FRAME_LENGTH = 1024
LEVEL_FLOOR_DB = -200.0
WINDOWS = ("hann", "rect")
# narrowest band, in bins, used for level estimates; a single bin fades
# too deeply on noise for sample-to-sample gain smoothness
MIN_BAND_BINS = 3


def make_window(kind: str = "hann", n: int = FRAME_LENGTH) -> np.ndarray:
    """Periodic raised-cosine (``hann``) or rectangular window.

    The periodic Hann window is exactly 1 at ``n // 2``.
    """
    if kind == "hann":
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
        w[n // 2] = 1.0
        return w
    if kind == "rect":
        return np.ones(n)
    raise ValueError(f"unknown window {kind!r}; expected one of {WINDOWS}")


def window_calibration_offset(window: np.ndarray, full_scale_spl: float) -> float:
    """dB offset mapping summed one-sided frame power to dB SPL.

    A full-scale sine of amplitude 1 puts ``N * sum(w**2) / 2`` of one-sided
    power into the bins around its frequency, and must read ``full_scale_spl``.
    """
    n = len(window)
    return full_scale_spl - 10.0 * np.log10(n * np.sum(window**2) / 2.0)


def bin_frequencies(sample_rate: float, n: int = FRAME_LENGTH) -> np.ndarray:
    return np.arange(n // 2 + 1) * (sample_rate / n)


def one_sided_power(spectrum: np.ndarray) -> np.ndarray:
    """``|X|**2`` for bins 0..N/2 doubled everywhere except DC and Nyquist."""
    p = spectrum.real**2 + spectrum.imag**2
    p[..., 1:-1] *= 2.0
    return p


def erb_band_indices(centers: np.ndarray, bin_freqs: np.ndarray,
                     min_bins: int = MIN_BAND_BINS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bin ranges ``[lo, hi]`` with ``|f_j - f_c| <= ERB(f_c) / 2``.

    Returns ``lo``, ``hi + 1`` and a per-band correction in dB. Band sums are
    ``cs[hi1] - cs[lo]`` on a zero-prefixed cumulative sum. Bands holding
    fewer than ``min_bins`` bins are widened to ``min_bins`` bins around the
    nearest bin, and the correction rescales their summed power from the
    widened bandwidth to one ERB (exact for locally flat spectra).
    """
    centers = np.asarray(centers, dtype=float)
    erb = erb_bandwidth(centers)
    lo = np.searchsorted(bin_freqs, centers - erb / 2.0, side="left")
    hi1 = np.searchsorted(bin_freqs, centers + erb / 2.0, side="right")
    correction = np.zeros(centers.shape)
    narrow = hi1 - lo < min_bins
    if np.any(narrow):
        df = bin_freqs[1] - bin_freqs[0]
        nearest = np.clip(np.rint(centers[narrow] / df).astype(np.int64), 0, len(bin_freqs) - 1)
        lo[narrow] = np.maximum(nearest - min_bins // 2, 0)
        hi1[narrow] = np.minimum(lo[narrow] + min_bins, len(bin_freqs))
        correction[narrow] = 10.0 * np.log10(erb[narrow] / ((hi1[narrow] - lo[narrow]) * df))
    return lo.astype(np.int64), hi1.astype(np.int64), correction


def band_levels(power: np.ndarray, lo: np.ndarray, hi1: np.ndarray, offset) -> np.ndarray:
    """Summed band power in dB (+ offset, scalar or per band) with the silence floor.

    ``power`` may be 1-D (bins) or 2-D (frames x bins).
    """
    cs = np.zeros(power.shape[:-1] + (power.shape[-1] + 1,))
    np.cumsum(power, axis=-1, out=cs[..., 1:])
    s = cs[..., hi1] - cs[..., lo]
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.where(s > 0, s, 1.0)) + offset
    return np.where(s > 0, np.maximum(out, LEVEL_FLOOR_DB), LEVEL_FLOOR_DB)


def long_term_power(signal: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Mean one-sided frame power over half-overlapping windowed frames."""
    x = np.asarray(signal, dtype=float)
    n = len(window)
    if len(x) < n:
        raise ValueError(f"signal shorter than {n} samples")
    hop = n // 2
    n_frames = 1 + (len(x) - n) // hop
    acc = np.zeros(n // 2 + 1)
    block = 512
    for start in range(0, n_frames, block):
        idx = np.arange(start, min(start + block, n_frames)) * hop
        frames = x[idx[:, None] + np.arange(n)] * window
        acc += one_sided_power(np.fft.rfft(frames, axis=1)).sum(axis=0)
    return acc / n_frames


def mean_square_level(signal: np.ndarray, full_scale_spl: float = 100.0) -> float:
    """Level in dB SPL of a whole signal (full-scale sine reads ``full_scale_spl``)."""
    ms = float(np.mean(np.square(signal, dtype=float)))
    if ms <= 0:
        return LEVEL_FLOOR_DB
    return 10.0 * np.log10(ms / 0.5) + full_scale_spl


def scale_to_level(signal: np.ndarray, level_db: float, full_scale_spl: float = 100.0) -> np.ndarray:
    current = mean_square_level(signal, full_scale_spl)
    return np.asarray(signal, dtype=float) * 10.0 ** ((level_db - current) / 20.0)
