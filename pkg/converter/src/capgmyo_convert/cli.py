import argparse
import sys

from .convert import DataFormatError, ParameterError, convert


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="capgmyo-convert",
        description="Convert vendor .mat recordings into the manifest+f32 dataset format.",
    )
    parser.add_argument("--in", dest="in_dir", required=True, metavar="DIR",
                        help="directory holding SSS-GGG-TTT.mat vendor files")
    parser.add_argument("--out", dest="out_root", required=True, metavar="DIR",
                        help="output dataset root (created if missing)")
    parser.add_argument("--db", required=True, choices=["a", "b"],
                        help="vendor database: a (single session) or b (two interleaved sessions)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        result = convert(args.in_dir, args.out_root, args.db)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3

    for path, reason in result.skipped:
        print(f"warning: skipped {path}: {reason}", file=sys.stderr)
    print(f"wrote {result.converted} recordings to {result.manifest_path}")
    if result.skipped:
        print(f"warning: {len(result.skipped)} file(s) skipped", file=sys.stderr)
        return 3
    return 0
