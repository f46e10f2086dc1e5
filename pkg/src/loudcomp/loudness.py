"""Specific loudness of uniformly exciting noise for normal and impaired ears.

A compact variant of the Moore-Glasberg excitation-to-loudness transform.
Levels are auditory-filter levels in dB SPL; excitation ``E = 10**(L/10)``.

For an ear with outer (OHC) and inner (IHC) hair cell losses at ``f``::

    E_att   = E * 10**(-HL_ihc / 10)
    N_c     = C * [(G*E_att + A)**alpha - A**alpha] * steep(E)
    N_p     = C * [sqrt(E_att / K) - sqrt(E_tq * 10**(HL_ohc / 10) / K)]
    N'      = max(N_c, N_p, 0)

``G`` is the low-frequency cochlear-amplifier gain, ``A = a * G * E_tq`` with
``a = 2`` for a healthy ear and ``a`` raised with OHC loss so the impaired
threshold lands at ``T_Q + HL``. ``steep`` steepens growth below the ear's
threshold. The passive branch ``N_p`` takes over at high levels and is where
impaired and normal loudness converge.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import NamedTuple

import numpy as np

from loudcomp.audiogram import Audiogram
from loudcomp.erb import erb_number, erb_number_to_hz
from loudcomp.spectral import (
    FRAME_LENGTH,
    LEVEL_FLOOR_DB,
    band_levels,
    bin_frequencies,
    erb_band_indices,
    long_term_power,
    make_window,
    one_sided_power,
    window_calibration_offset,
)

LEVEL_RANGE = (-30.0, 140.0)
CHANNEL_STEP_CAM = 0.25
LOWEST_CHANNEL_HZ = 50.0
HIGHEST_CHANNEL_HZ = 16000.0


def _load_threshold_table() -> tuple[tuple[float, float], ...]:
    text = (resources.files("loudcomp") / "data" / "thresholds.txt").read_text()
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            f, t = line.split()
            rows.append((float(f), float(t)))
    return tuple(rows)


THRESHOLD_TABLE = _load_threshold_table()


class EarPoint(NamedTuple):
    """Frequency-dependent constants of an ear, broadcast over ``f``."""

    e_tq: np.ndarray  # threshold excitation of a normal ear
    gain: np.ndarray  # cochlear-amplifier gain G
    a_term: np.ndarray  # compressive-branch constant A
    e_thr: np.ndarray  # this ear's threshold excitation
    ihc_att: np.ndarray  # linear IHC attenuation
    passive_floor: np.ndarray  # attenuated threshold excitation / K


@dataclass(frozen=True)
class EarModel:
    """Loudness model parameters for one ear.

    ``audiogram=None`` is a normal-hearing ear. A zero-loss audiogram gives
    numerically identical results.
    """

    audiogram: Audiogram | None = None
    alpha: float = 0.2
    passive_denominator: float = 1.04e6
    scale_c: float = 1.0
    threshold_table: tuple[tuple[float, float], ...] = THRESHOLD_TABLE

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.passive_denominator > 0:
            raise ValueError("passive_denominator must be positive")
        if not self.scale_c > 0:
            raise ValueError("scale_c must be positive")

    @cached_property
    def _tq_axis(self):
        table = np.asarray(self.threshold_table, dtype=float)
        return erb_number(table[:, 0]), table[:, 1]

    @property
    def identifier(self) -> str:
        if self.audiogram is None:
            return "normal"
        return "audiogram:" + self.audiogram.digest()[:16]

    def threshold_db(self, f):
        """Normal free-field threshold T_Q(f) in dB SPL (ERB-axis interpolation)."""
        cams, tq = self._tq_axis
        return np.interp(erb_number(f), cams, tq)

    def losses(self, f):
        if self.audiogram is None:
            z = np.zeros(np.shape(f))
            return z, z
        ohc, ihc = self.audiogram.split_hl(f)
        return np.asarray(ohc, dtype=float), np.asarray(ihc, dtype=float)

    def at(self, f) -> EarPoint:
        f = np.asarray(f, dtype=float)
        tq = self.threshold_db(f)
        tq_1k = self.threshold_db(1000.0)
        e_tq = 10.0 ** (tq / 10.0)
        gain = np.minimum(1.0, 10.0 ** ((tq_1k - tq) / 10.0))
        ohc, ihc = self.losses(f)
        a_factor = ohc_a_factor(ohc, self.alpha)
        return EarPoint(
            e_tq=e_tq,
            gain=gain,
            a_term=a_factor * gain * e_tq,
            e_thr=e_tq * 10.0 ** ((ohc + ihc) / 10.0),
            ihc_att=10.0 ** (-ihc / 10.0),
            passive_floor=e_tq * 10.0 ** (ohc / 10.0) / self.passive_denominator,
        )


def _increment(base, delta, alpha):
    """``(base + delta)**alpha - base**alpha`` without cancellation."""
    return base**alpha * np.expm1(alpha * np.log1p(delta / base))


def ohc_a_factor(hl_ohc, alpha: float = 0.2):
    """Factor ``a`` with ``A = a * G * E_tq`` for an OHC loss in dB.

    Solves ``(r + a)**alpha - a**alpha = 3**alpha - 2**alpha`` with
    ``r = 10**(hl_ohc/10)``, so that the compressive branch reaches the
    normal threshold loudness exactly ``hl_ohc`` dB above normal threshold.
    Returns exactly 2 for zero loss.
    """
    hl = np.asarray(hl_ohc, dtype=float)
    r = 10.0 ** (hl / 10.0)
    target = 3.0**alpha - 2.0**alpha
    # h(a) is decreasing in a; bracket the root in log(a)
    lo = np.full(hl.shape, np.log(2.0))
    hi = np.log(4.0 * (alpha * r / target) ** (1.0 / (1.0 - alpha)) + 4.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        too_loud = _increment(np.exp(mid), r, alpha) > target
        lo = np.where(too_loud, mid, lo)
        hi = np.where(too_loud, hi, mid)
        if np.all(hi - lo < 1e-15):
            break
    a = np.exp(0.5 * (lo + hi))
    a = np.where(hl == 0.0, 2.0, a)
    return float(a) if a.ndim == 0 else a


def loudness_at_point(level, point: EarPoint, ear: EarModel):
    """Specific loudness (sone/Cam) for levels broadcast against ``point``.

    No range validation; levels at or below the silence floor give 0.
    """
    level = np.asarray(level, dtype=float)
    e = np.where(level > LEVEL_FLOOR_DB, 10.0 ** (level / 10.0), 0.0)
    e_att = e * point.ihc_att
    n_c = _increment(point.a_term, point.gain * e_att, ear.alpha)
    below = e < point.e_thr
    steep = np.where(below, (2.0 * e / (e + point.e_thr)) ** 1.5, 1.0)
    n_c = n_c * steep
    n_p = np.sqrt(e_att / ear.passive_denominator) - np.sqrt(point.passive_floor)
    return ear.scale_c * np.maximum(np.maximum(n_c, n_p), 0.0)


def specific_loudness(level, f, ear: EarModel):
    """Specific loudness in sone/Cam of uniformly exciting noise.

    Args:
        level: auditory-filter level in dB SPL, within [-30, 140].
        f: frequency in Hz, positive.
        ear: the ear model.
    """
    level = np.asarray(level, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(level < LEVEL_RANGE[0]) or np.any(level > LEVEL_RANGE[1]) or np.any(~np.isfinite(level)):
        raise ValueError(f"level outside [{LEVEL_RANGE[0]:g}, {LEVEL_RANGE[1]:g}] dB SPL")
    if np.any(f <= 0) or np.any(~np.isfinite(f)):
        raise ValueError("frequency must be positive")
    out = loudness_at_point(level, ear.at(f), ear)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FrameSpectrum:
    """Complex 1024-point spectrum of one analysis window."""

    bins: np.ndarray
    sample_rate: float
    calibration_offset: float

    @classmethod
    def from_frame(cls, frame, sample_rate: float, window: str = "hann", full_scale_spl: float = 100.0):
        frame = np.asarray(frame, dtype=float)
        w = make_window(window, len(frame))
        return cls(np.fft.fft(frame * w), sample_rate, window_calibration_offset(w, full_scale_spl))


def auditory_filter_levels(s: FrameSpectrum) -> np.ndarray:
    """Per-bin auditory-filter level in dB SPL for bins 0..N/2."""
    bins = np.asarray(s.bins)
    n = bins.shape[-1]
    if n != FRAME_LENGTH:
        raise ValueError(f"expected a {FRAME_LENGTH}-point spectrum, got {n}")
    freqs = bin_frequencies(s.sample_rate, n)
    lo, hi1, corr = erb_band_indices(freqs, freqs)
    power = one_sided_power(bins[..., : n // 2 + 1])
    return band_levels(power, lo, hi1, s.calibration_offset + corr)


def channel_frequencies(sample_rate: float) -> np.ndarray:
    """Centers of the 0.25-Cam channel grid used for loudness summation."""
    top = min(sample_rate / 2.0, HIGHEST_CHANNEL_HZ)
    first = np.ceil(erb_number(LOWEST_CHANNEL_HZ) / CHANNEL_STEP_CAM) * CHANNEL_STEP_CAM
    cams = np.arange(first, erb_number(top) + 1e-9, CHANNEL_STEP_CAM)
    return erb_number_to_hz(cams)


def channel_levels(signal, sample_rate: float, full_scale_spl: float = 100.0, window: str = "hann"):
    """Long-term auditory-filter levels on the 0.25-Cam channel grid.

    Returns ``(channel_freqs, levels_db)``.
    """
    w = make_window(window)
    power = long_term_power(signal, w)
    freqs = bin_frequencies(sample_rate)
    centers = channel_frequencies(sample_rate)
    lo, hi1, corr = erb_band_indices(centers, freqs)
    return centers, band_levels(power, lo, hi1, window_calibration_offset(w, full_scale_spl) + corr)


def total_loudness(signal, sample_rate: float, ear: EarModel, full_scale_spl: float = 100.0) -> float:
    """Overall loudness in sone of a (stationary) signal."""
    if len(signal) < FRAME_LENGTH:
        raise ValueError(f"signal shorter than {FRAME_LENGTH} samples")
    centers, levels = channel_levels(signal, sample_rate, full_scale_spl)
    n = loudness_at_point(levels, ear.at(centers), ear)
    return float(np.sum(n) * CHANNEL_STEP_CAM)
