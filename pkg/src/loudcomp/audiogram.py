"""Listener audiograms: validation, ERB-axis interpolation and hair-cell split."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from loudcomp.erb import erb_number

MIN_FREQ_HZ = 125.0
MAX_FREQ_HZ = 16000.0
MAX_HL_DB = 120.0
DEFAULT_OHC_FRACTION = 0.9


class AudiogramError(ValueError):
    """Raised for malformed or out-of-range audiogram documents."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Audiogram:
    """Hearing loss in dB HL at a set of frequencies.

    ``ohc_fraction`` is the share of the loss attributed to outer hair
    cells; the remainder is inner hair cell loss.
    """

    frequencies: tuple[float, ...]
    hl: tuple[float, ...]
    ohc_fraction: float = DEFAULT_OHC_FRACTION
    _cams: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        hl = tuple(float(h) for h in self.hl)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "hl", hl)
        object.__setattr__(self, "ohc_fraction", float(self.ohc_fraction))
        _validate(freqs, hl, self.ohc_fraction)
        cams = erb_number(np.asarray(freqs))
        cams.setflags(write=False)
        object.__setattr__(self, "_cams", cams)

    @classmethod
    def flat(cls, hl_db: float = 0.0, ohc_fraction: float = DEFAULT_OHC_FRACTION) -> Audiogram:
        freqs = (250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0)
        return cls(freqs, (hl_db,) * len(freqs), ohc_fraction)

    @property
    def is_zero_loss(self) -> bool:
        return all(h == 0.0 for h in self.hl)

    def to_dict(self) -> dict[str, Any]:
        return {
            "frequencies_hz": list(self.frequencies),
            "hl_db": list(self.hl),
            "ohc_fraction": self.ohc_fraction,
        }

    def digest(self) -> str:
        """Stable SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def hl_at(self, f):
        """Hearing loss at ``f`` Hz, interpolated linearly on the ERB-number axis.

        Values outside the measured range are held flat. Accepts scalars
        or arrays.
        """
        f_arr = np.asarray(f, dtype=float)
        if np.any(f_arr <= 0):
            raise ValueError("frequency must be positive")
        out = np.interp(erb_number(f_arr), self._cams, self.hl)
        return float(out) if out.ndim == 0 else out

    def split_hl(self, f):
        """Return ``(hl_ohc, hl_ihc)`` at ``f``.

        The two parts always sum exactly to :meth:`hl_at`: the larger part is
        computed by multiplication and the smaller one by subtraction, which
        is exact in floating point when the subtrahend is at least half the
        total.
        """
        total = np.asarray(self.hl_at(f), dtype=float)
        frac = self.ohc_fraction
        if frac >= 0.5:
            ohc = frac * total
            ihc = total - ohc
        else:
            ihc = (1.0 - frac) * total
            ohc = total - ihc
        if total.ndim == 0:
            return float(ohc), float(ihc)
        return ohc, ihc


def _validate(freqs, hl, ohc_fraction):
    if len(freqs) != len(hl):
        raise AudiogramError("hl_db", f"length {len(hl)} != frequencies_hz length {len(freqs)}")
    if len(freqs) < 2:
        raise AudiogramError("frequencies_hz", "at least 2 points required")
    for i, f in enumerate(freqs):
        if not np.isfinite(f) or not MIN_FREQ_HZ <= f <= MAX_FREQ_HZ:
            raise AudiogramError(f"frequencies_hz[{i}]", f"{f} outside [{MIN_FREQ_HZ:g}, {MAX_FREQ_HZ:g}] Hz")
        if i and f <= freqs[i - 1]:
            raise AudiogramError(f"frequencies_hz[{i}]", "frequencies must be strictly increasing")
    for i, h in enumerate(hl):
        if not np.isfinite(h) or not 0.0 <= h <= MAX_HL_DB:
            raise AudiogramError(f"hl_db[{i}]", f"{h} outside [0, {MAX_HL_DB:g}] dB HL")
    if not np.isfinite(ohc_fraction) or not 0.0 <= ohc_fraction <= 1.0:
        raise AudiogramError("ohc_fraction", f"{ohc_fraction} outside [0, 1]")


def parse_audiogram(document: str | bytes | dict) -> Audiogram:
    """Build an :class:`Audiogram` from a JSON document (or decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise AudiogramError("$", f"invalid JSON ({exc.msg})") from None
    if not isinstance(document, dict):
        raise AudiogramError("$", "expected a JSON object")
    unknown = set(document) - {"frequencies_hz", "hl_db", "ohc_fraction"}
    if unknown:
        raise AudiogramError("$", f"unknown field(s): {', '.join(sorted(unknown))}")
    values = {}
    for key in ("frequencies_hz", "hl_db"):
        if key not in document:
            raise AudiogramError(key, "missing required field")
        arr = document[key]
        if not isinstance(arr, list):
            raise AudiogramError(key, "expected an array of numbers")
        for i, v in enumerate(arr):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise AudiogramError(f"{key}[{i}]", "expected a number")
        values[key] = arr
    frac = document.get("ohc_fraction", DEFAULT_OHC_FRACTION)
    if isinstance(frac, bool) or not isinstance(frac, (int, float)):
        raise AudiogramError("ohc_fraction", "expected a number")
    return Audiogram(tuple(values["frequencies_hz"]), tuple(values["hl_db"]), frac)


def load_audiogram(path: str | Path) -> Audiogram:
    return parse_audiogram(Path(path).read_text())


def fixture_names() -> list[str]:
    root = resources.files("loudcomp") / "data" / "audiograms"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> Audiogram:
    """Load one of the bundled audiograms (``flat_0``, ``sloping``, ``flat_40``)."""
    res = resources.files("loudcomp") / "data" / "audiograms" / f"{name}.json"
    return parse_audiogram(res.read_text())
