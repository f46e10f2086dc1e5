"""Mono WAV input/output (16-bit PCM and 32-bit float)."""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

WRITE_POLICIES = ("float", "clip", "normalize")


class WavError(ValueError):
    """Unreadable, unsupported or multichannel WAV file."""


@dataclass(frozen=True)
class WriteReport:
    clipped: int
    scale: float = 1.0


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Return ``(samples, sample_rate)`` with samples as float64 in [-1, 1]."""
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, EOFError, struct.error) as exc:
        raise WavError(f"{path}: malformed WAV file ({exc})") from None
    if data.ndim != 1:
        raise WavError(
            f"{path}: {data.shape[1]} channels; only mono is supported. "
            "Downmix or extract one channel first (e.g. `sox in.wav out.wav remix 1`)."
        )
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise WavError(f"{path}: unsupported sample format {data.dtype}; use 16-bit PCM or 32-bit float")
    return x, int(rate)


def write_wav(path: str | Path, samples, sample_rate: int, policy: str = "float") -> WriteReport:
    """Write a mono WAV.

    Policies: ``float`` writes 32-bit float unchanged; ``clip`` writes 16-bit
    PCM, clipping and counting samples beyond full scale; ``normalize`` scales
    the signal down to full scale if its peak exceeds it, then writes 16-bit.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise WavError("only mono signals can be written")
    if policy == "float":
        wavfile.write(path, int(sample_rate), x.astype(np.float32))
        return WriteReport(clipped=int(np.count_nonzero(np.abs(x) > 1.0)))
    scale = 1.0
    if policy == "normalize":
        peak = float(np.max(np.abs(x))) if len(x) else 0.0
        if peak > 1.0:
            scale = 1.0 / peak
            x = x * scale
    elif policy != "clip":
        raise ValueError(f"unknown write policy {policy!r}; expected one of {WRITE_POLICIES}")
    clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, int(sample_rate), pcm)
    return WriteReport(clipped=clipped, scale=scale)
