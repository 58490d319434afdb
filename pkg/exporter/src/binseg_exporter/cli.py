"""Command line: binseg-export --images DIR --out DIR --model NAME."""

from __future__ import annotations

import argparse
import sys

from .export import ImageDecodeError, export_features
from .net import ModelUnavailable


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binseg-export",
        description="Dump per-image convolutional feature maps as BTSR tensors",
    )
    parser.add_argument("--images", required=True, help="directory of input images")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model", default="alexnet", help="alexnet or alexnet-random")
    parser.add_argument("--weights", help="local state-dict file for --model alexnet")
    parser.add_argument("--seed", type=int, default=0, help="init seed for alexnet-random")
    parser.add_argument("--threads", type=int, help="torch intra-op threads")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = export_features(args.images, args.model, args.out,
                                   weights_path=args.weights, seed=args.seed,
                                   threads=args.threads)
    except (ModelUnavailable, ImageDecodeError, OSError) as e:
        print(f"binseg-export: error: {e}", file=sys.stderr)
        return 1
    for entry in manifest["images"]:
        h, w, d = entry["shape"]
        print(f"{entry['id']}: {h}x{w}x{d} -> {entry['path']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
