"""``loudcomp`` command-line interface.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 partial corpus failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from loudcomp import __version__
from loudcomp.analysis import (
    average_spectra,
    loudness_restoration_report,
    match_loudness,
    restoration_csv,
    spectrum_csv,
    third_octave_spectrum,
)
from loudcomp.audiogram import AudiogramError, load_audiogram
from loudcomp.corpus import Options, compensate_file, get_table, run_corpus
from loudcomp.gaintable import TableFormatError, export_csv, export_table, import_table
from loudcomp.loudness import EarModel
from loudcomp.processor import benchmark
from loudcomp.stoi import stoi
from loudcomp.wavio import WRITE_POLICIES, WavError, read_wav

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_PARTIAL = 0, 1, 2, 3


def _options(args) -> Options:
    return Options(
        inverse=getattr(args, "inverse", False),
        full_scale_spl=getattr(args, "full_scale_spl", 100.0),
        window=getattr(args, "window", "hann"),
        write_policy=getattr(args, "write_policy", "float"),
        with_stoi=getattr(args, "stoi", False),
    )


def cmd_table_build(args):
    options = _options(args)
    table = get_table(load_audiogram(args.audiogram), args.sample_rate, options)
    out = Path(args.out or f"{'inverse' if args.inverse else 'compensate'}_{int(args.sample_rate)}.lcgt")
    out.write_bytes(export_table(table))
    n_sat = int(table.saturated.sum())
    print(f"wrote {out} ({table.direction.value}, {len(table.bin_frequencies)}x{len(table.level_grid)}, "
          f"{n_sat} saturated cells)")


def cmd_table_export(args):
    table = import_table(Path(args.table).read_bytes())
    Path(args.csv).write_text(export_csv(table))
    print(f"wrote {args.csv}")


def cmd_compensate(args):
    entry = compensate_file(args.input, args.output, load_audiogram(args.audiogram), _options(args))
    print(json.dumps(entry, indent=2))


def cmd_corpus(args):
    manifest = run_corpus(args.metadata, args.wav_dir, args.out_dir, load_audiogram(args.audiogram),
                          jobs=args.jobs, options=_options(args))
    n_skip = sum(1 for e in manifest.entries if e.get("skipped"))
    n_fail = len(manifest.failures)
    print(f"{len(manifest.entries)} files: {len(manifest.entries) - n_skip - n_fail} processed, "
          f"{n_skip} skipped, {n_fail} failed")
    for e in manifest.failures:
        print(f"  {e['id']}: {e['error']}", file=sys.stderr)
    return EXIT_PARTIAL if n_fail else EXIT_OK


def cmd_stoi(args):
    x, fs = read_wav(args.clean)
    y, fs_y = read_wav(args.processed)
    if fs != fs_y:
        raise ValueError("clean and processed sample rates differ")
    n = min(len(x), len(y))
    if abs(len(x) - len(y)) > 0:
        logging.warning("length mismatch (%d vs %d samples); truncating to %d", len(x), len(y), n)
    score = stoi(x[:n], y[:n], fs)
    print("file,stoi")
    print(f"{args.processed},{score.value:.6f}")


def _wav_files(path: Path):
    if path.is_dir():
        return sorted(path.glob("*.wav"))
    return [path]


def cmd_spectrum(args):
    files = _wav_files(Path(args.input))
    if not files:
        raise FileNotFoundError(f"no .wav files in {args.input}")
    signals, rates = zip(*(read_wav(f) for f in files))
    if len(set(rates)) != 1:
        raise ValueError("all files must share one sample rate")
    if args.average or len(files) == 1:
        spec = average_spectra(signals, rates[0], args.full_scale_spl)
        text = spectrum_csv(spec)
    else:
        text = "file,band_hz,level_db\n"
        for f, x in zip(files, signals):
            for c, level in third_octave_spectrum(x, rates[0], args.full_scale_spl).as_rows():
                text += f"{f.name},{c},{level:.4f}\n"
    Path(args.csv).write_text(text)
    print(f"wrote {args.csv}")


def cmd_match_loudness(args):
    ref, fs = read_wav(args.ref)
    tgt, fs_t = read_wav(args.target)
    if fs != fs_t:
        raise ValueError("sample rates differ")
    g = match_loudness(ref, tgt, fs, EarModel(), args.full_scale_spl)
    print(f"{g:.3f}")


def cmd_restore_report(args):
    x, fs = read_wav(args.original)
    y, fs_y = read_wav(args.processed)
    if fs != fs_y:
        raise ValueError("sample rates differ")
    report = loudness_restoration_report(x, y, fs, EarModel(load_audiogram(args.audiogram)), args.full_scale_spl)
    Path(args.csv).write_text(restoration_csv(report))
    print(f"median |err| {report.median_abs_err:.4f}, 90th percentile {report.p90_abs_err:.4f}")


def cmd_bench(args):
    options = _options(args)
    table = get_table(load_audiogram(args.audiogram), args.sample_rate, options)
    res = benchmark(table, args.seconds, options.processor_config(), sliding=not args.naive)
    print(f"{res['samples_per_sec']:.0f} samples/s ({res['realtime_factor']:.2f}x real time, "
          f"{res['samples']} samples in {res['seconds']:.2f} s)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loudcomp", description="Hearing-loss compensation engine and analysis tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def spl(sp):
        sp.add_argument("--full-scale-spl", type=float, default=100.0,
                        help="dB SPL of a full-scale sine (default 100)")

    table = sub.add_parser("table", help="build or export gain tables")
    tsub = table.add_subparsers(dest="table_command", required=True)
    tb = tsub.add_parser("build")
    tb.add_argument("--audiogram", required=True)
    tb.add_argument("--inverse", action="store_true")
    tb.add_argument("--sample-rate", type=float, default=22050.0)
    tb.add_argument("--out")
    tb.set_defaults(func=cmd_table_build)
    te = tsub.add_parser("export")
    te.add_argument("--table", required=True)
    te.add_argument("--csv", required=True)
    te.set_defaults(func=cmd_table_export)

    c = sub.add_parser("compensate", help="process one WAV file")
    c.add_argument("--audiogram", required=True)
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--out", dest="output", required=True)
    c.add_argument("--inverse", action="store_true")
    c.add_argument("--window", choices=("hann", "rect"), default="hann")
    c.add_argument("--write-policy", choices=WRITE_POLICIES, default="float")
    c.add_argument("--stoi", action="store_true", help="also report STOI against the input")
    spl(c)
    c.set_defaults(func=cmd_compensate)

    cp = sub.add_parser("corpus", help="process a speech corpus")
    cp.add_argument("--audiogram", required=True)
    cp.add_argument("--metadata", required=True)
    cp.add_argument("--wav-dir", required=True)
    cp.add_argument("--out-dir", required=True)
    cp.add_argument("--jobs", type=int, default=1)
    cp.add_argument("--inverse", action="store_true")
    cp.add_argument("--window", choices=("hann", "rect"), default="hann")
    cp.add_argument("--write-policy", choices=WRITE_POLICIES, default="float")
    cp.add_argument("--stoi", action="store_true")
    spl(cp)
    cp.set_defaults(func=cmd_corpus)

    s = sub.add_parser("stoi", help="STOI of a processed file against a clean one")
    s.add_argument("--clean", required=True)
    s.add_argument("--processed", required=True)
    s.set_defaults(func=cmd_stoi)

    sp = sub.add_parser("spectrum", help="third-octave spectra as CSV")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--average", action="store_true")
    spl(sp)
    sp.set_defaults(func=cmd_spectrum)

    m = sub.add_parser("match-loudness", help="gain (dB) making --ref as loud as --target")
    m.add_argument("--ref", required=True)
    m.add_argument("--target", required=True)
    spl(m)
    m.set_defaults(func=cmd_match_loudness)

    r = sub.add_parser("restore-report", help="per-channel loudness restoration error")
    r.add_argument("--original", required=True)
    r.add_argument("--processed", required=True)
    r.add_argument("--audiogram", required=True)
    r.add_argument("--csv", required=True)
    spl(r)
    r.set_defaults(func=cmd_restore_report)

    b = sub.add_parser("bench", help="processing throughput")
    b.add_argument("--audiogram", required=True)
    b.add_argument("--seconds", type=float, default=60.0)
    b.add_argument("--sample-rate", type=float, default=22050.0)
    b.add_argument("--naive", action="store_true", help="time the exact per-frame path")
    spl(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args) or EXIT_OK
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"loudcomp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AudiogramError, WavError, TableFormatError, ValueError) as exc:
        print(f"loudcomp: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"loudcomp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
