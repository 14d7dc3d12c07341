"""arcplot command line: compare metrics CSVs on one figure."""

from __future__ import annotations

import argparse
import sys

from .plot import DEFAULT_SMOOTHING, PlotSpec, SchemaError, render


def _parse_labeled_csv(value: str) -> tuple[str, str]:
    path, sep, label = value.rpartition(":")
    if not sep or not path or not label:
        raise argparse.ArgumentTypeError(
            "expected <path>:<label>, got %r" % value)
    return path, label


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="arcplot",
                                     description="plot score-vs-iteration curves "
                                                 "from simulator metrics CSVs")
    parser.add_argument("--csv", dest="inputs", action="append", required=True,
                        type=_parse_labeled_csv, metavar="PATH:LABEL",
                        help="labeled input CSV; repeatable")
    parser.add_argument("--marker", type=int, default=None,
                        help="iteration to mark with a vertical line")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--smooth", type=int, default=DEFAULT_SMOOTHING,
                        help="moving-average window in slots (default %d)"
                             % DEFAULT_SMOOTHING)
    parser.add_argument("--raw", action="store_true",
                        help="overlay the unsmoothed series")
    args = parser.parse_args(argv)
    spec = PlotSpec(inputs=args.inputs, out_path=args.out, marker=args.marker,
                    smoothing=args.smooth, show_raw=args.raw)
    try:
        out = render(spec)
    except SchemaError as exc:
        print("schema error: %s" % exc, file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
