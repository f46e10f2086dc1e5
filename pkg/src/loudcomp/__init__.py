"""Offline hearing-loss compensation at one-sample hop resolution."""

__version__ = "0.1.0"

from loudcomp.audiogram import Audiogram, AudiogramError, load_audiogram, parse_audiogram  # noqa: E402
from loudcomp.gaintable import (  # noqa: E402
    Direction,
    GainTable,
    build_table,
    equal_loudness_level,
    lookup_gain,
    table_for_audiogram,
)
from loudcomp.loudness import EarModel, specific_loudness, total_loudness  # noqa: E402
from loudcomp.processor import ProcessorConfig, process, process_sliding  # noqa: E402
from loudcomp.stoi import stoi  # noqa: E402

__all__ = [
    "Audiogram",
    "AudiogramError",
    "Direction",
    "EarModel",
    "GainTable",
    "ProcessorConfig",
    "build_table",
    "equal_loudness_level",
    "load_audiogram",
    "lookup_gain",
    "parse_audiogram",
    "process",
    "process_sliding",
    "specific_loudness",
    "stoi",
    "table_for_audiogram",
    "total_loudness",
]
