"""Frequency x level gain look-up tables derived from equal specific loudness."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from loudcomp.audiogram import Audiogram
from loudcomp.loudness import LEVEL_RANGE, EarModel, loudness_at_point
from loudcomp.spectral import FRAME_LENGTH, bin_frequencies

MAGIC = b"LCGT"
FORMAT_VERSION = 1
LOWEST_GAIN_FREQ_HZ = 50.0
BISECTION_TOL_DB = 0.01
# 0.25 dB keeps interpolation error below 0.1 dB even at the steep
# onset of inverse-table columns just above the impaired threshold
LEVEL_STEP_DB = 0.25
DEFAULT_LEVEL_GRID = -20.0 + LEVEL_STEP_DB * np.arange(561)


class Direction(str, Enum):
    COMPENSATE = "compensate"
    INVERSE = "inverse"


class TableFormatError(ValueError):
    """Raised when a serialized table fails its integrity checks."""


def equal_loudness_level(level, f, reference: EarModel, listener: EarModel, tol: float = BISECTION_TOL_DB):
    """Level at which ``listener`` hears the specific loudness ``reference`` hears at ``level``.

    Bisection on [-30, 140] dB SPL, relying on strict monotonicity of
    specific loudness. Inputs broadcast against each other.

    Returns:
        ``(matched_level, saturated)``; ``saturated`` marks targets that are
        out of reach and were clamped to the search interval.
    """
    level = np.asarray(level, dtype=float)
    f = np.asarray(f, dtype=float)
    level, f = np.broadcast_arrays(level, f)
    ref_pt = reference.at(f)
    lis_pt = listener.at(f)
    target = loudness_at_point(level, ref_pt, reference)

    lo_bound, hi_bound = LEVEL_RANGE
    lo = np.full(level.shape, lo_bound)
    hi = np.full(level.shape, hi_bound)
    too_loud = loudness_at_point(lo, lis_pt, listener) > target
    too_soft = loudness_at_point(hi, lis_pt, listener) < target
    n_iter = int(np.ceil(np.log2((hi_bound - lo_bound) / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = loudness_at_point(mid, lis_pt, listener) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(too_loud, lo_bound, out)
    out = np.where(too_soft, hi_bound, out)
    same = _same_ear_at(ref_pt, lis_pt, reference, listener)
    out = np.where(same, level, out)
    saturated = (too_loud | too_soft) & ~same
    if out.ndim == 0:
        return float(out), bool(saturated)
    return out, saturated


def _same_ear_at(p, q, a: EarModel, b: EarModel):
    if (a.alpha, a.passive_denominator, a.scale_c) != (b.alpha, b.passive_denominator, b.scale_c):
        return np.zeros(np.shape(p.e_tq), dtype=bool)
    same = np.ones(np.shape(p.e_tq), dtype=bool)
    for x, y in zip(p, q):
        same &= np.asarray(x) == np.asarray(y)
    return same


@dataclass(frozen=True, eq=False)
class GainTable:
    """Gain in dB for each FFT bin (rows) and auditory-filter level (columns)."""

    direction: Direction
    sample_rate: float
    level_grid: np.ndarray
    bin_frequencies: np.ndarray
    gains: np.ndarray  # float32, shape (n_bins, n_levels)
    saturated: np.ndarray  # bool, same shape
    max_gain: float = 60.0
    min_gain: float = -80.0
    source_ear: str = "normal"
    target_ear: str = "normal"
    n_fft: int = FRAME_LENGTH
    _level_step: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        for name, dtype in (("level_grid", np.float64), ("bin_frequencies", np.float64),
                            ("gains", np.float32), ("saturated", np.bool_)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.gains.shape != (len(self.bin_frequencies), len(self.level_grid)):
            raise ValueError("gains shape does not match grids")
        if self.saturated.shape != self.gains.shape:
            raise ValueError("saturation flags shape does not match gains")
        steps = np.diff(self.level_grid)
        if len(steps) == 0 or not np.allclose(steps, steps[0]):
            raise ValueError("level grid must be uniform")
        object.__setattr__(self, "_level_step", float(steps[0]))

    def __eq__(self, other):
        if not isinstance(other, GainTable):
            return NotImplemented
        return export_table(self) == export_table(other)

    __hash__ = None

    @property
    def level_step(self) -> float:
        return self._level_step

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    def digest(self) -> str:
        return hashlib.sha256(export_table(self)).hexdigest()

    def gains_for_levels(self, levels: np.ndarray) -> np.ndarray:
        """Per-bin gain in dB for per-bin levels (last axis = bins).

        Linear interpolation along the level grid, clamped at its ends.
        """
        pos = (np.asarray(levels, dtype=float) - self.level_grid[0]) / self._level_step
        pos = np.clip(pos, 0.0, len(self.level_grid) - 1.0)
        i0 = np.minimum(pos.astype(np.int64), len(self.level_grid) - 2)
        frac = pos - i0
        rows = np.arange(len(self.bin_frequencies))
        g = self.gains.astype(np.float64)
        return g[rows, i0] * (1.0 - frac) + g[rows, i0 + 1] * frac


def build_table(
    reference: EarModel,
    listener: EarModel,
    direction: Direction | str,
    sample_rate: float,
    level_grid=DEFAULT_LEVEL_GRID,
    max_gain: float = 60.0,
    min_gain: float = -80.0,
) -> GainTable:
    """Tabulate ``equal_loudness_level(L) - L`` for every bin and grid level.

    Compensation maps a normal reference ear onto the impaired listener;
    the inverse direction swaps the roles.
    """
    direction = Direction(direction)
    normal_side = reference if direction is Direction.COMPENSATE else listener
    if normal_side.audiogram is not None and not normal_side.audiogram.is_zero_loss:
        side = "reference" if direction is Direction.COMPENSATE else "listener"
        raise ValueError(f"{direction.value} table requires a normal-hearing {side} ear")
    if max_gain < min_gain:
        raise ValueError("max_gain must be >= min_gain")
    levels = np.asarray(level_grid, dtype=float)
    freqs = bin_frequencies(sample_rate)
    column_freqs = np.maximum(freqs, LOWEST_GAIN_FREQ_HZ)
    uniq, inverse = np.unique(column_freqs, return_inverse=True)
    matched, saturated = equal_loudness_level(levels[None, :], uniq[:, None], reference, listener)
    gains = np.clip(matched - levels[None, :], min_gain, max_gain)
    return GainTable(
        direction=direction,
        sample_rate=float(sample_rate),
        level_grid=levels,
        bin_frequencies=freqs,
        gains=gains[inverse],
        saturated=saturated[inverse],
        max_gain=float(max_gain),
        min_gain=float(min_gain),
        source_ear=reference.identifier,
        target_ear=listener.identifier,
    )


def table_for_audiogram(audiogram: Audiogram, sample_rate: float, direction="compensate", **kwargs) -> GainTable:
    """Compensation or inverse table between a normal ear and ``audiogram``."""
    normal, impaired = EarModel(), EarModel(audiogram)
    if Direction(direction) is Direction.COMPENSATE:
        return build_table(normal, impaired, direction, sample_rate, **kwargs)
    return build_table(impaired, normal, direction, sample_rate, **kwargs)


def lookup_gain(t: GainTable, f, level):
    """Bilinear gain lookup over bin frequency and level; inputs are clamped."""
    f = np.clip(np.asarray(f, dtype=float), 0.0, t.nyquist)
    level = np.asarray(level, dtype=float)
    df = t.bin_frequencies[1] - t.bin_frequencies[0]
    fpos = np.clip(f / df, 0.0, len(t.bin_frequencies) - 1.0)
    k0 = np.minimum(fpos.astype(np.int64), len(t.bin_frequencies) - 2)
    kf = fpos - k0
    lpos = np.clip((level - t.level_grid[0]) / t._level_step, 0.0, len(t.level_grid) - 1.0)
    i0 = np.minimum(lpos.astype(np.int64), len(t.level_grid) - 2)
    lf = lpos - i0
    g = t.gains.astype(np.float64)
    out = ((g[k0, i0] * (1 - lf) + g[k0, i0 + 1] * lf) * (1 - kf)
           + (g[k0 + 1, i0] * (1 - lf) + g[k0 + 1, i0 + 1] * lf) * kf)
    return float(out) if out.ndim == 0 else out


def _header(t: GainTable) -> dict:
    return {
        "direction": t.direction.value,
        "sample_rate": t.sample_rate,
        "n_fft": t.n_fft,
        "n_bins": len(t.bin_frequencies),
        "level_start": float(t.level_grid[0]),
        "level_step": t._level_step,
        "n_levels": len(t.level_grid),
        "max_gain": t.max_gain,
        "min_gain": t.min_gain,
        "source_ear": t.source_ear,
        "target_ear": t.target_ear,
    }


def export_table(t: GainTable) -> bytes:
    """Binary form: magic, version, JSON grid header, float32 gains, flags, CRC32."""
    header = json.dumps(_header(t), sort_keys=True).encode()
    body = b"".join([
        MAGIC,
        struct.pack("<II", FORMAT_VERSION, len(header)),
        header,
        t.gains.astype("<f4").tobytes(order="C"),
        np.packbits(t.saturated, axis=None).tobytes(),
    ])
    return body + struct.pack("<I", zlib.crc32(body))


def import_table(data: bytes) -> GainTable:
    if len(data) < 16:
        raise TableFormatError("truncated table")
    if data[:4] != MAGIC:
        raise TableFormatError("bad magic; not a gain table")
    version, header_len = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise TableFormatError(f"unsupported table version {version}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise TableFormatError("checksum mismatch; table is corrupted or truncated")
    pos = 12
    try:
        hdr = json.loads(data[pos:pos + header_len])
    except ValueError:
        raise TableFormatError("unreadable table header") from None
    pos += header_len
    n_bins, n_levels = hdr["n_bins"], hdr["n_levels"]
    n_cells = n_bins * n_levels
    n_flag_bytes = (n_cells + 7) // 8
    if len(data) - 4 != pos + 4 * n_cells + n_flag_bytes:
        raise TableFormatError("payload size does not match header")
    gains = np.frombuffer(data, dtype="<f4", count=n_cells, offset=pos).reshape(n_bins, n_levels)
    pos += 4 * n_cells
    flags = np.unpackbits(np.frombuffer(data, dtype=np.uint8, count=n_flag_bytes, offset=pos))[:n_cells]
    levels = hdr["level_start"] + hdr["level_step"] * np.arange(n_levels)
    return GainTable(
        direction=hdr["direction"],
        sample_rate=hdr["sample_rate"],
        level_grid=levels,
        bin_frequencies=bin_frequencies(hdr["sample_rate"], hdr["n_fft"]),
        gains=gains.astype(np.float32),
        saturated=flags.reshape(n_bins, n_levels).astype(bool),
        max_gain=hdr["max_gain"],
        min_gain=hdr["min_gain"],
        source_ear=hdr["source_ear"],
        target_ear=hdr["target_ear"],
        n_fft=hdr["n_fft"],
    )


def export_csv(t: GainTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["freq_hz", "level_db", "gain_db"])
    for k, f in enumerate(t.bin_frequencies):
        for i, level in enumerate(t.level_grid):
            writer.writerow([f"{f:.6f}", f"{level:g}", f"{float(t.gains[k, i]):.6f}"])
    return buf.getvalue()
