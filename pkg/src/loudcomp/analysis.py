"""Objective analyses: third-octave spectra, loudness matching, restoration checks."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from loudcomp.erb import erb_number
from loudcomp.loudness import EarModel, channel_levels, loudness_at_point
from loudcomp.spectral import FRAME_LENGTH, LEVEL_FLOOR_DB

NOMINAL_CENTERS = (50, 63, 80, 100, 125, 160, 200, 250, 315, 400, 500, 630, 800,
                   1000, 1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000)
EXACT_CENTERS = 1000.0 * 2.0 ** (np.arange(-13, 10) / 3.0)
BAND_EDGES = np.concatenate([EXACT_CENTERS / 2 ** (1 / 6), EXACT_CENTERS[-1:] * 2 ** (1 / 6)])


@dataclass(frozen=True)
class ThirdOctaveSpectrum:
    centers: tuple[int, ...]
    levels: np.ndarray  # dB SPL per band, floor -200
    powers: np.ndarray  # mean-square per band, full-scale sine = 0.5
    full_scale_spl: float = 100.0

    def as_rows(self):
        return list(zip(self.centers, self.levels.tolist()))


def _to_db(power, full_scale_spl):
    power = np.asarray(power, dtype=float)
    out = np.full(power.shape, LEVEL_FLOOR_DB)
    pos = power > 0
    out[pos] = np.maximum(10.0 * np.log10(power[pos] / 0.5) + full_scale_spl, LEVEL_FLOOR_DB)
    return out


def _spectrum_from_powers(powers, full_scale_spl):
    return ThirdOctaveSpectrum(NOMINAL_CENTERS, _to_db(powers, full_scale_spl), np.asarray(powers, float), full_scale_spl)


def band_powers(signal, sample_rate: float) -> np.ndarray:
    """Mean-square signal power in each third-octave band (Welch estimate)."""
    x = np.asarray(signal, dtype=float)
    if len(x) < FRAME_LENGTH:
        raise ValueError(f"signal shorter than {FRAME_LENGTH} samples")
    nperseg = min(8192, len(x))
    f, pxx = welch(x, fs=sample_rate, window="hann", nperseg=nperseg, detrend=False, scaling="density")
    df = f[1] - f[0]
    band = np.searchsorted(BAND_EDGES, f, side="right") - 1
    inside = (band >= 0) & (band < len(EXACT_CENTERS))
    return np.bincount(band[inside], weights=pxx[inside] * df, minlength=len(EXACT_CENTERS))


def third_octave_spectrum(signal, sample_rate: float, full_scale_spl: float = 100.0) -> ThirdOctaveSpectrum:
    """Long-term third-octave band levels, 50 Hz to 8 kHz (23 bands)."""
    return _spectrum_from_powers(band_powers(signal, sample_rate), full_scale_spl)


def average_spectra(signals, sample_rate: float, full_scale_spl: float = 100.0) -> ThirdOctaveSpectrum:
    """Per-band power mean over a corpus, then dB."""
    powers = [band_powers(x, sample_rate) for x in signals]
    if not powers:
        raise ValueError("empty corpus")
    return _spectrum_from_powers(np.mean(np.sort(np.array(powers), axis=0), axis=0), full_scale_spl)


def speech_shaped_noise(template: ThirdOctaveSpectrum, duration: float, sample_rate: float,
                        seed: int | None = None, iterations: int = 4) -> np.ndarray:
    """Stationary noise whose third-octave spectrum follows ``template``.

    White Gaussian noise is filtered in the frequency domain by a gain curve
    interpolated (log-frequency, dB) between band centres, then refined by a
    few per-band corrections measured on the generated noise itself.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * sample_rate))
    if n < FRAME_LENGTH:
        raise ValueError(f"duration too short; need at least {FRAME_LENGTH} samples")
    target = np.asarray(template.powers, dtype=float)
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    logf = np.log(np.maximum(freqs, 1.0))
    logc = np.log(EXACT_CENTERS)
    widths = np.diff(BAND_EDGES)
    density_db = np.where(target > 0, 10 * np.log10(np.maximum(target, 1e-300) / widths), -300.0)
    gain_db = np.interp(logf, logc, density_db)  # power dB equals amplitude dB
    for _ in range(iterations + 1):
        y = np.fft.irfft(spec * 10.0 ** (gain_db / 20.0), n)
        measured = band_powers(y, sample_rate)
        ok = (target > 0) & (measured > 0)
        corr_db = np.zeros(len(target))
        corr_db[ok] = 10 * np.log10(target[ok] / measured[ok])
        if np.all(np.abs(corr_db) < 0.05):
            break
        gain_db = gain_db + np.interp(logf, logc, corr_db)
    return y


@dataclass(frozen=True)
class RestorationReport:
    """Per-channel loudness of the processed signal for the impaired ear vs. the original for a normal ear."""

    cams: np.ndarray
    frequencies: np.ndarray
    loudness_normal: np.ndarray
    loudness_impaired: np.ndarray
    err_rel: np.ndarray  # NaN where the channel is inaudible to the normal ear
    median_abs_err: float
    p90_abs_err: float

    def rows(self):
        return list(zip(self.cams.tolist(), self.err_rel.tolist()))


def loudness_restoration_report(original, processed, sample_rate: float, ear_impaired: EarModel,
                                full_scale_spl: float = 100.0, audible_fraction: float = 1e-3) -> RestorationReport:
    """Compare N'_impaired(processed) with N'_normal(original) on the 0.25-Cam grid.

    Channels where the normal-ear loudness is below ``audible_fraction`` of
    its maximum carry no meaningful relative error and are excluded.
    """
    original = np.asarray(original, dtype=float)
    processed = np.asarray(processed, dtype=float)
    if original.shape != processed.shape:
        raise ValueError("original and processed must have equal length")
    normal = EarModel(scale_c=ear_impaired.scale_c)
    freqs, lv_orig = channel_levels(original, sample_rate, full_scale_spl)
    _, lv_proc = channel_levels(processed, sample_rate, full_scale_spl)
    n_ref = loudness_at_point(lv_orig, normal.at(freqs), normal)
    n_out = loudness_at_point(lv_proc, ear_impaired.at(freqs), ear_impaired)
    audible = n_ref > audible_fraction * max(n_ref.max(), 0.0)
    err = np.full(len(freqs), np.nan)
    err[audible] = (n_out[audible] - n_ref[audible]) / n_ref[audible]
    if audible.any():
        abs_err = np.abs(err[audible])
        med, p90 = float(np.median(abs_err)), float(np.percentile(abs_err, 90))
    elif np.array_equal(n_out, n_ref):
        med = p90 = 0.0
    else:
        med = p90 = float("nan")
    return RestorationReport(erb_number(freqs), freqs, n_ref, n_out, err, med, p90)


def match_loudness(reference, target, sample_rate: float, ear: EarModel | None = None,
                   full_scale_spl: float = 100.0, tol_db: float = 1e-4) -> float:
    """Gain in dB that makes ``reference`` as loud as ``target`` (model-based).

    Bisection over [-40, 40] dB. A gain only shifts every channel level, so
    the long-term channel levels are computed once.
    """
    ear = ear or EarModel()
    freqs, lv_ref = channel_levels(reference, sample_rate, full_scale_spl)
    _, lv_tgt = channel_levels(target, sample_rate, full_scale_spl)
    point = ear.at(freqs)
    goal = loudness_at_point(lv_tgt, point, ear).sum()
    audible = lv_ref > LEVEL_FLOOR_DB

    def loud(g):
        return loudness_at_point(np.where(audible, lv_ref + g, LEVEL_FLOOR_DB), point, ear).sum()

    lo, hi = -40.0, 40.0
    if not loud(lo) <= goal <= loud(hi) or not audible.any():
        raise ValueError("loudness match not bracketed within +-40 dB (silent or degenerate input)")
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if loud(mid) < goal:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spectrum_csv(spectrum: ThirdOctaveSpectrum) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["band_hz", "level_db"])
    for c, level in spectrum.as_rows():
        w.writerow([c, f"{level:.4f}"])
    return buf.getvalue()


def restoration_csv(report: RestorationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cam", "err_rel"])
    for cam, err in report.rows():
        w.writerow([f"{cam:.2f}", "" if np.isnan(err) else f"{err:.6f}"])
    return buf.getvalue()
