"""Hop-1 spectral gain processor with centre-sample resynthesis.

Every output sample ``m`` is the centre sample of the inverse DFT of the
gain-weighted spectrum of the window centred on input sample ``m``. Only
that one sample is needed, so the inverse transform reduces to a signed sum
over bins.

Two paths share this contract: :func:`process` transforms every frame
exactly, :func:`process_sliding` updates a running DFT one sample at a time.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from loudcomp._kernels import sliding_blocks
from loudcomp.gaintable import GainTable
from loudcomp.spectral import (
    LEVEL_FLOOR_DB,
    WINDOWS,
    band_levels,
    erb_band_indices,
    make_window,
    one_sided_power,
    window_calibration_offset,
)

_BLOCK_FRAMES = 2048


@dataclass(frozen=True)
class ProcessorConfig:
    window_length: int = 1024
    window: str = "hann"
    full_scale_spl: float = 100.0
    resync_interval: int = 4096
    hop: int = 1

    def __post_init__(self):
        n = self.window_length
        if n < 4 or n & (n - 1):
            raise ValueError("window_length must be a power of two")
        if self.hop != 1:
            raise ValueError("hop is fixed at 1 sample")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")
        if self.resync_interval < 1:
            raise ValueError("resync_interval must be >= 1")

    @property
    def center_index(self) -> int:
        return self.window_length // 2


def calibration_offset(cfg: ProcessorConfig) -> float:
    """dB added to summed one-sided frame power to get dB SPL."""
    return window_calibration_offset(make_window(cfg.window, cfg.window_length), cfg.full_scale_spl)


def _prepare(signal, sample_rate, table: GainTable, cfg: ProcessorConfig):
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a mono (1-D) waveform")
    if len(x) == 0:
        raise ValueError("empty input")
    if table.sample_rate != sample_rate:
        raise ValueError(
            f"table was built for {table.sample_rate:g} Hz but the signal is {sample_rate:g} Hz; rebuild the table"
        )
    if table.n_fft != cfg.window_length:
        raise ValueError(f"table expects {table.n_fft}-point frames, config uses {cfg.window_length}")
    half = cfg.center_index
    xp = np.concatenate([np.zeros(half), x, np.zeros(half)])
    lo, hi1, corr = erb_band_indices(table.bin_frequencies, table.bin_frequencies)
    return x, xp, lo, hi1, calibration_offset(cfg) + corr


def frame_gains(xp, start, stop, table: GainTable, cfg: ProcessorConfig, lo, hi1, offsets):
    """Windowed spectra and per-bin gains (dB) of frames ``start..stop-1`` of padded input."""
    w = make_window(cfg.window, cfg.window_length)
    frames = sliding_window_view(xp, cfg.window_length)[start:stop]
    spec = np.fft.rfft(frames * w, axis=1)
    levels = band_levels(one_sided_power(spec), lo, hi1, offsets)
    return spec, table.gains_for_levels(levels)


def _center_samples(spec, gains_db, n):
    lin = np.exp(gains_db * (np.log(10.0) / 20.0))
    coef = np.where(np.arange(spec.shape[1]) % 2 == 0, 2.0, -2.0)
    coef[0] = 1.0
    coef[-1] = 1.0
    return (lin * spec.real) @ coef / n


def process(signal, table: GainTable, cfg: ProcessorConfig | None = None, sample_rate: float | None = None) -> np.ndarray:
    """Reference path: exact DFT of every hop-1 frame.

    ``sample_rate`` defaults to the table's rate. Output has the input's
    length and is not clipped.
    """
    cfg = cfg or ProcessorConfig()
    sample_rate = table.sample_rate if sample_rate is None else sample_rate
    x, xp, lo, hi1, offsets = _prepare(signal, sample_rate, table, cfg)
    out = np.empty(len(x))
    for start in range(0, len(x), _BLOCK_FRAMES):
        stop = min(start + _BLOCK_FRAMES, len(x))
        spec, g = frame_gains(xp, start, stop, table, cfg, lo, hi1, offsets)
        out[start:stop] = _center_samples(spec, g, cfg.window_length)
    return out


def process_sliding(signal, table: GainTable, cfg: ProcessorConfig | None = None,
                    sample_rate: float | None = None) -> np.ndarray:
    """Optimized path: running rectangular DFT updated per sample.

    The raised-cosine spectrum is a three-tap circular convolution of the
    rectangular one. An exact transform restarts the recurrence every
    ``cfg.resync_interval`` samples to bound rounding drift.
    """
    cfg = cfg or ProcessorConfig()
    sample_rate = table.sample_rate if sample_rate is None else sample_rate
    x, xp, lo, hi1, offsets = _prepare(signal, sample_rate, table, cfg)
    n = cfg.window_length
    out = np.empty(len(x))
    gains = np.ascontiguousarray(table.gains, dtype=np.float64)
    starts_all = np.arange(0, len(x), cfg.resync_interval, dtype=np.int64)
    frames = sliding_window_view(xp, n)
    per_chunk = max(1, min(2048, 65536 // cfg.resync_interval))  # bounds spectra memory
    for c in range(0, len(starts_all), per_chunk):
        starts = starts_all[c:c + per_chunk]
        spectra = np.fft.rfft(frames[starts], axis=1)
        sliding_blocks(
            xp, starts, spectra, cfg.resync_interval, len(x), cfg.window == "hann",
            lo, hi1, offsets, gains, float(table.level_grid[0]),
            table.level_step, LEVEL_FLOOR_DB, out,
        )
    return out


def benchmark(table: GainTable, seconds: float = 10.0, cfg: ProcessorConfig | None = None,
              sliding: bool = True, seed: int = 0) -> dict:
    """Time one processing run on noise; reports samples/s and real-time factor."""
    rng = np.random.default_rng(seed)
    x = 0.05 * rng.standard_normal(int(seconds * table.sample_rate))
    fn = process_sliding if sliding else process
    fn(x[: 2 * table.n_fft], table, cfg)  # warm-up / JIT
    t0 = time.perf_counter()
    fn(x, table, cfg)
    elapsed = time.perf_counter() - t0
    rate = len(x) / elapsed
    return {"samples": len(x), "seconds": elapsed, "samples_per_sec": rate,
            "realtime_factor": rate / table.sample_rate}
