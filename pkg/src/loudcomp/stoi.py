"""Short-time objective intelligibility (classic STOI, Taal et al. 2011)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

FS = 10000
N_FRAME = 256
NFFT = 512
NUM_BANDS = 15
MIN_FREQ = 150.0
N_SEGMENT = 30  # frames per segment (384 ms)
BETA = -15.0  # lower SDR bound, dB
DYN_RANGE = 40.0
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class StoiScore:
    value: float
    band_segment_correlations: np.ndarray  # (bands, segments)

    def __float__(self):
        return self.value


def resample(signal, from_rate: float, to_rate: float) -> np.ndarray:
    """Polyphase windowed-sinc resampling; output length is ``floor(n * to / from)``."""
    if from_rate <= 0 or to_rate <= 0:
        raise ValueError("sample rates must be positive")
    x = np.asarray(signal, dtype=float)
    if from_rate == to_rate:
        return x.copy()
    ratio = Fraction(to_rate / from_rate).limit_denominator(10000)
    if float(from_rate).is_integer() and float(to_rate).is_integer():
        ratio = Fraction(int(to_rate), int(from_rate))
    n_out = int(np.floor(len(x) * to_rate / from_rate))
    y = resample_poly(x, ratio.numerator, ratio.denominator, padtype="line")
    return y[:n_out]


def third_octave_matrix(fs=FS, nfft=NFFT, num_bands=NUM_BANDS, min_freq=MIN_FREQ):
    """Binary band-assignment matrix (bands x rfft bins) and band centres."""
    f = np.linspace(0, fs, nfft + 1)[: nfft // 2 + 1]
    k = np.arange(num_bands)
    centers = 2.0 ** (k / 3.0) * min_freq
    lows = min_freq * 2.0 ** ((2 * k - 1) / 6.0)
    highs = min_freq * 2.0 ** ((2 * k + 1) / 6.0)
    obm = np.zeros((num_bands, len(f)))
    for i in range(num_bands):
        lo = np.argmin((f - lows[i]) ** 2)
        hi = np.argmin((f - highs[i]) ** 2)
        obm[i, lo:hi] = 1.0
    return obm, centers


def _window(n):
    return np.hanning(n + 2)[1:-1]


def _frames(x, n, hop):
    # canonical framing stops one hop short of the last full frame
    starts = np.arange(0, max(len(x) - n, 0), hop)
    return x[starts[:, None] + np.arange(n)]


def remove_silent_frames(x, y, dyn_range=DYN_RANGE, n=N_FRAME, hop=N_FRAME // 2):
    """Drop frames whose clean energy is ``dyn_range`` dB or more below the loudest."""
    w = _window(n)
    xf = _frames(x, n, hop) * w
    yf = _frames(y, n, hop) * w
    energy = 20.0 * np.log10(np.linalg.norm(xf, axis=1) + EPS)
    keep = energy > energy.max() - dyn_range
    xf, yf = xf[keep], yf[keep]
    return _overlap_add(xf, hop), _overlap_add(yf, hop)


def _overlap_add(frames, hop):
    n_frames, n = frames.shape
    out = np.zeros((n_frames - 1) * hop + n) if n_frames else np.zeros(0)
    for i in range(n_frames):
        out[i * hop:i * hop + n] += frames[i]
    return out


def _band_envelopes(x, obm):
    spec = np.fft.rfft(_frames(x, N_FRAME, N_FRAME // 2) * _window(N_FRAME), n=NFFT, axis=1)
    return np.sqrt(obm @ (np.abs(spec) ** 2).T)


def stoi(clean, degraded, fs: float) -> StoiScore:
    """Intelligibility of ``degraded`` relative to ``clean``.

    The final value is clamped to [0, 1]; raw correlations are kept in
    ``band_segment_correlations``.
    """
    x = np.asarray(clean, dtype=float)
    y = np.asarray(degraded, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"signals must be 1-D with equal length, got {x.shape} and {y.shape}")
    if fs < FS:
        raise ValueError(f"sample rate must be at least {FS} Hz")
    if fs != FS:
        x = resample(x, fs, FS)
        y = resample(y, fs, FS)
    if len(x) < N_FRAME:
        raise ValueError("signal shorter than one analysis frame")
    x, y = remove_silent_frames(x, y)
    obm, _ = third_octave_matrix()
    x_tob = _band_envelopes(x, obm) if len(x) >= N_FRAME else np.zeros((NUM_BANDS, 0))
    y_tob = _band_envelopes(y, obm) if len(y) >= N_FRAME else np.zeros((NUM_BANDS, 0))
    n_frames = x_tob.shape[1]
    if n_frames < N_SEGMENT:
        raise ValueError(f"only {n_frames} non-silent frames; need at least {N_SEGMENT} (~384 ms)")

    # segments: (n_seg, bands, N_SEGMENT)
    idx = np.arange(N_SEGMENT, n_frames + 1)[:, None] + np.arange(-N_SEGMENT, 0)
    x_seg = x_tob[:, idx].transpose(1, 0, 2)
    y_seg = y_tob[:, idx].transpose(1, 0, 2)
    norm = np.linalg.norm(x_seg, axis=2, keepdims=True) / (np.linalg.norm(y_seg, axis=2, keepdims=True) + EPS)
    y_prime = np.minimum(y_seg * norm, x_seg * (1.0 + 10.0 ** (-BETA / 20.0)))
    xc = x_seg - x_seg.mean(axis=2, keepdims=True)
    yc = y_prime - y_prime.mean(axis=2, keepdims=True)
    xc /= np.linalg.norm(xc, axis=2, keepdims=True) + EPS
    yc /= np.linalg.norm(yc, axis=2, keepdims=True) + EPS
    corr = np.sum(xc * yc, axis=2).T
    value = float(np.clip(np.mean(corr), 0.0, 1.0))
    return StoiScore(value, corr)
