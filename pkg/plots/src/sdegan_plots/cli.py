"""Script entry point: sdegan-plot <kind> --in CSV [--in2 CSV] --out IMG."""

from __future__ import annotations

import argparse
import sys

from sdegan_plots.figures import PLOT_KINDS, PlotError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdegan-plot", description="Render sdegan CSV artifacts to figures")
    parser.add_argument("kind", choices=PLOT_KINDS)
    parser.add_argument("--in", dest="input", required=True, help="input CSV")
    parser.add_argument("--in2", dest="input2", default=None,
                        help="optional second input CSV (ecdf overlays)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--metric", choices=("ks", "w1"), default="ks",
                        help="sweep metric")
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    inputs = [args.input] + ([args.input2] if args.input2 else [])
    labels = {"title": args.title} if args.title else {}
    try:
        spec = PlotSpec(kind=args.kind, inputs=inputs, output=args.out,
                        labels=labels, metric=args.metric)
        render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
