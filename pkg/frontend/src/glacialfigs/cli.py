"""Command line entry: figures <kind> --in DIR --out FILE.png"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import SchemaError
from .render import KINDS, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render publication-style figures from glacialcycle outputs.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="in_dir", type=Path, required=True,
                        help="directory holding the simulation CLI's outputs")
    parser.add_argument("--out", dest="out_file", type=Path, required=True,
                        help="image file to write (.png)")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(kind=args.kind, in_dir=args.in_dir, out_file=args.out_file))
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
