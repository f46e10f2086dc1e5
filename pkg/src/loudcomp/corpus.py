"""Per-file compensation and the batch corpus pipeline."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from loudcomp import __version__
from loudcomp.audiogram import Audiogram
from loudcomp.gaintable import (
    DEFAULT_LEVEL_GRID,
    Direction,
    GainTable,
    TableFormatError,
    export_table,
    import_table,
    table_for_audiogram,
)
from loudcomp.processor import ProcessorConfig, process_sliding
from loudcomp.stoi import stoi
from loudcomp.wavio import read_wav, write_wav

log = logging.getLogger(__name__)

CACHE_ENV = "LOUDCOMP_CACHE_DIR"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class Options:
    inverse: bool = False
    full_scale_spl: float = 100.0
    window: str = "hann"
    write_policy: str = "float"
    resync_interval: int = 4096
    max_gain: float = 60.0
    min_gain: float = -80.0
    with_stoi: bool = False
    cache_dir: str | None = None

    @property
    def direction(self) -> Direction:
        return Direction.INVERSE if self.inverse else Direction.COMPENSATE

    def processor_config(self) -> ProcessorConfig:
        return ProcessorConfig(window=self.window, full_scale_spl=self.full_scale_spl,
                               resync_interval=self.resync_interval)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "loudcomp"


def table_key(audiogram: Audiogram, sample_rate: float, options: Options) -> str:
    desc = {
        "audiogram": audiogram.to_dict(),
        "sample_rate": float(sample_rate),
        "direction": options.direction.value,
        "max_gain": options.max_gain,
        "min_gain": options.min_gain,
        "levels": [float(DEFAULT_LEVEL_GRID[0]), float(DEFAULT_LEVEL_GRID[-1]), len(DEFAULT_LEVEL_GRID)],
        "version": __version__,
    }
    return hashlib.sha256(json.dumps(desc, sort_keys=True).encode()).hexdigest()[:32]


def get_table(audiogram: Audiogram, sample_rate: float, options: Options = Options()) -> GainTable:
    """Build a gain table, reusing a cached copy keyed by audiogram and settings."""
    cache = Path(options.cache_dir) if options.cache_dir else default_cache_dir()
    path = cache / f"{table_key(audiogram, sample_rate, options)}.lcgt"
    if path.exists():
        try:
            return import_table(path.read_bytes())
        except TableFormatError as exc:
            log.warning("discarding corrupt cached table %s: %s", path, exc)
    table = table_for_audiogram(audiogram, sample_rate, options.direction,
                                max_gain=options.max_gain, min_gain=options.min_gain)
    try:
        cache.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_bytes(export_table(table))
        os.replace(tmp, path)
    except OSError as exc:
        log.warning("could not cache gain table in %s: %s", cache, exc)
    return table


def compensate_signal(x, sample_rate, table: GainTable, options: Options) -> np.ndarray:
    return process_sliding(x, table, options.processor_config(), sample_rate=sample_rate)


def compensate_file(src, dst, audiogram: Audiogram, options: Options = Options(),
                    table: GainTable | None = None) -> dict:
    """Process one WAV file and return its manifest entry."""
    t0 = time.perf_counter()
    x, fs = read_wav(src)
    if table is None:
        table = get_table(audiogram, fs, options)
    elif table.sample_rate != fs:
        raise ValueError(f"{src}: sample rate {fs} Hz does not match the table ({table.sample_rate:g} Hz); "
                         "rebuild the table for this rate")
    y = compensate_signal(x, fs, table, options)
    report = write_wav(dst, y, fs, options.write_policy)
    entry = {
        "input": str(src),
        "output": str(dst),
        "duration_s": len(x) / fs,
        "clip_count": report.clipped,
        "output_sha256": sha256_file(dst),
        "seconds": time.perf_counter() - t0,
    }
    if options.with_stoi:
        entry["stoi"] = stoi(x, y, fs).value
    return entry


def read_metadata(path) -> list[tuple[str, str | None]]:
    """Parse LJSpeech ``id|text|normalized`` metadata or a plain list of ids/paths.

    Returns ``(id, explicit_path_or_None)`` pairs in file order.
    """
    items = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "|" in line:
            items.append((line.split("|", 1)[0].strip(), None))
        elif line.lower().endswith(".wav"):
            items.append((Path(line).stem, line))
        else:
            items.append((line, None))
    return items


@dataclass
class Manifest:
    entries: list[dict] = field(default_factory=list)
    audiogram_digest: str = ""
    table_digest: str = ""
    tool_version: str = __version__
    options: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[dict]:
        return [e for e in self.entries if e.get("status") == "failed"]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> Manifest:
        return cls(**json.loads(Path(path).read_text()))


# worker-process state, set once per process by the pool initializer
_WORKER: dict = {}


def _init_worker(table_bytes: bytes, audiogram: Audiogram, options: Options):
    _WORKER["table"] = import_table(table_bytes)
    _WORKER["audiogram"] = audiogram
    _WORKER["options"] = options


def _run_one(item):
    file_id, src, dst = item
    try:
        entry = compensate_file(src, dst, _WORKER["audiogram"], _WORKER["options"], _WORKER["table"])
        entry["status"] = "ok"
    except Exception as exc:  # recorded in the manifest, run continues
        entry = {"input": str(src), "output": str(dst), "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    entry["id"] = file_id
    return entry


def _probe_rate(items) -> int:
    for _, src, _ in items:
        try:
            return read_wav(src)[1]
        except (OSError, ValueError):
            continue
    raise FileNotFoundError("no readable input files in corpus")


def run_corpus(metadata, wav_dir, out_dir, audiogram: Audiogram, jobs: int = 1,
               options: Options = Options()) -> Manifest:
    """Compensate every listed file; resumable and independent of ``jobs``.

    Files whose output already matches the digest recorded in an existing
    manifest (for the same table) are skipped.
    """
    wav_dir, out_dir = Path(wav_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = []
    for file_id, explicit in read_metadata(metadata):
        src = Path(explicit) if explicit else wav_dir / f"{file_id}.wav"
        if explicit and not src.is_absolute():
            src = wav_dir / src
        items.append((file_id, str(src), str(out_dir / f"{file_id}.wav")))

    sample_rate = _probe_rate(items)
    table = get_table(audiogram, sample_rate, options)
    table_digest = table.digest()

    previous = {}
    manifest_path = out_dir / MANIFEST_NAME
    if manifest_path.exists():
        try:
            old = Manifest.load(manifest_path)
            if old.table_digest == table_digest:
                previous = {e["id"]: e for e in old.entries if e.get("status") == "ok"}
        except (ValueError, TypeError, KeyError) as exc:
            log.warning("ignoring unreadable manifest %s: %s", manifest_path, exc)

    entries, todo = [], []
    for item in items:
        prev = previous.get(item[0])
        out = Path(item[2])
        if prev and out.exists() and sha256_file(out) == prev.get("output_sha256"):
            entries.append({**prev, "skipped": True})
        else:
            todo.append(item)

    init_args = (export_table(table), audiogram, options)
    if jobs <= 1 or len(todo) <= 1:
        _init_worker(*init_args)
        results = [_run_one(item) for item in todo]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=init_args) as pool:
            results = list(pool.map(_run_one, todo))
    for r in results:
        r["skipped"] = False
    entries.extend(results)
    entries.sort(key=lambda e: e["id"])

    opts = asdict(options)
    opts.pop("cache_dir")
    manifest = Manifest(entries=entries, audiogram_digest=audiogram.digest(),
                        table_digest=table_digest, options=opts)
    manifest_path.write_text(manifest.to_json())
    return manifest
