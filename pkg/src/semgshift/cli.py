"""Command-line entry point.

Subcommands:

* ``synth``         generate a synthetic dataset in the canonical on-disk format
* ``run``           execute a benchmark config and write its report files
* ``stats``         run one statistical test on a CSV of group columns
* ``inspect``       print a summary of a canonical dataset
* ``convert-check`` fully validate a canonical dataset (reads every file)

Exit codes: 0 success, 2 parameter/protocol error, 3 missing or corrupt data.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__, experiments, ingest, stats
from .core import DataFormatError, GridLayout, ParameterError, ProtocolError

_STAT_TESTS = ("anova", "levene", "wilcoxon", "paired-t")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semgshift",
        description="Electrode-shift-robust sEMG gesture recognition benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"semgshift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--gestures", type=int, default=8)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--duration-s", type=float, default=1.2)
    p.add_argument("--sources", type=int, default=3, help="activation bumps per gesture")
    p.add_argument("--sigma", type=float, default=1.5, help="bump width in grid cells")
    p.add_argument("--snr", type=float, default=20.0, help="sensor SNR in dB (inf = noiseless)")
    p.add_argument("--shift", type=int, default=2, help="session-2 row shift")
    p.add_argument("--jitter", type=float, default=0.1, help="session-2 gain jitter")
    p.add_argument("--fs", type=float, default=1000.0)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=16)
    p.add_argument("--module-width", type=int, default=2)
    p.add_argument("--pitch-mm", type=float, default=8.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sessions", default="1,2", help="comma-separated subset of 1,2")

    p = sub.add_parser("run", help="run a benchmark config")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", help="report directory (overrides the config's output_dir)")

    p = sub.add_parser("stats", help="run one test on a CSV of group columns")
    p.add_argument("--input", required=True, help="CSV path; one column per group")
    p.add_argument("--test", required=True, choices=_STAT_TESTS)
    p.add_argument(
        "--alternative",
        default="two-sided",
        choices=("two-sided", "greater", "less"),
        help="paired-t only",
    )

    p = sub.add_parser("inspect", help="summarize a canonical dataset")
    p.add_argument("root", help="dataset directory containing manifest.json")

    p = sub.add_parser("convert-check", help="validate a canonical dataset end to end")
    p.add_argument("root", help="dataset directory containing manifest.json")

    return parser


def _cmd_synth(args) -> int:
    layout = GridLayout(args.rows, args.cols, args.module_width, args.pitch_mm)
    spec = ingest.SyntheticSpec(
        layout=layout,
        G=args.gestures,
        reps=args.reps,
        duration_s=args.duration_s,
        sources_per_gesture=args.sources,
        spatial_sigma=args.sigma,
        snr_db=args.snr,
        session_row_shift=args.shift,
        amplitude_jitter=args.jitter,
        subjects=args.subjects,
        fs=args.fs,
        seed=args.seed,
    )
    try:
        sessions = tuple(int(s) for s in args.sessions.split(",") if s.strip())
    except ValueError as e:
        raise ParameterError(f"bad --sessions value {args.sessions!r}") from e
    recordings = ingest.generate_synthetic(spec, sessions=sessions)
    manifest_path = ingest.write_canonical(recordings, args.out)
    print(f"wrote {len(recordings)} recordings to {args.out}")
    print(manifest_path)
    return 0


def _cmd_run(args) -> int:
    cfg = experiments.config_from_json(args.config)
    out_dir = args.out or cfg.output_dir
    if out_dir is None:
        raise ParameterError("no output directory: pass --out or set output_dir in the config")
    report = experiments.run(cfg)
    paths = experiments.write_report(report, out_dir)
    for fs, cond, pca, n, mean, std in report.aggregates():
        tag = " pca" if pca else ""
        print(f"{fs:>8s} {cond:>8s}{tag}: {mean:.3f} +/- {std:.3f} (n={n})")
    for path in paths:
        print(path)
    return 0


def _read_group_csv(path):
    """Columns of a headered CSV as float lists; empty cells are gaps."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need a header row plus data rows")
    header = [name.strip() for name in rows[0]]
    columns = [[] for _ in header]
    for row in rows[1:]:
        for i, cell in enumerate(row[: len(header)]):
            cell = cell.strip()
            if cell:
                try:
                    columns[i].append(float(cell))
                except ValueError as e:
                    raise DataFormatError(f"{path}: non-numeric cell {cell!r}") from e
    return header, columns


def _cmd_stats(args) -> int:
    header, columns = _read_group_csv(args.input)
    if args.test == "anova":
        result = stats.anova_oneway(columns)
    elif args.test == "levene":
        result = stats.levene(columns)
    else:
        if len(columns) != 2:
            raise ParameterError(f"{args.test} needs exactly 2 columns, got {len(columns)}")
        if len(columns[0]) != len(columns[1]):
            raise ParameterError("paired tests need equal-length columns")
        if args.test == "wilcoxon":
            result = stats.wilcoxon_signed_rank(columns[0], columns[1])
        else:
            result = stats.paired_t(columns[0], columns[1], alternative=args.alternative)
    df_txt = "" if result.df is None else f" df={tuple(result.df)}"
    flag = " [degenerate]" if result.degenerate else ""
    print(f"groups: {', '.join(header)}")
    print(f"{result.method}: statistic={result.statistic:.6g}{df_txt} p={result.p_value:.6g}{flag}")
    return 0


def _cmd_inspect(args) -> int:
    manifest = ingest.load_manifest(args.root)
    grid = manifest["grid"]
    entries = manifest["recordings"]
    subjects = sorted({e["subject"] for e in entries})
    sessions = sorted({e["session"] for e in entries})
    gestures = sorted({e["gesture"] for e in entries})
    reps = sorted({e["repetition"] for e in entries})
    total = sum(int(e["sample_count"]) for e in entries)
    print(f"root:        {args.root}")
    print(f"format:      v{manifest['format_version']}, fs {manifest['fs_hz']} Hz")
    print(
        f"grid:        {grid['rows']}x{grid['cols']} "
        f"(module width {grid['module_width']}, pitch {grid['pitch_mm']} mm)"
    )
    print(f"recordings:  {len(entries)} ({total} samples total)")
    print(f"subjects:    {subjects}")
    print(f"sessions:    {sessions}")
    print(f"gestures:    {gestures}")
    print(f"repetitions: {reps}")
    missing = [e["path"] for e in entries if not os.path.isfile(os.path.join(args.root, e["path"]))]
    if missing:
        raise DataFormatError(f"{len(missing)} listed files missing, first: {missing[0]}")
    return 0


def _cmd_convert_check(args) -> int:
    recordings = ingest.read_canonical(args.root)
    bad = 0
    for rec in recordings:
        if not np.isfinite(rec.samples).all():
            bad += 1
            print(
                f"non-finite samples: subject {rec.subject} session {rec.session} "
                f"gesture {rec.gesture} rep {rec.repetition}",
                file=sys.stderr,
            )
    if bad:
        raise DataFormatError(f"{bad} recordings contain NaN or Inf samples")
    n_ch = recordings[0].layout.channels if recordings else 0
    print(f"OK: {len(recordings)} recordings, {n_ch} channels each")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "run": _cmd_run,
    "stats": _cmd_stats,
    "inspect": _cmd_inspect,
    "convert-check": _cmd_convert_check,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ParameterError, ProtocolError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"error: invalid JSON: {e}", file=sys.stderr)
        return 3
    except (DataFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
