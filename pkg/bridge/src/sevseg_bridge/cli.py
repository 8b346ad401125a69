"""export-detections: run a serialized detector and write detection JSON."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import BridgeConfig, BridgeError, export_detections


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-detections",
        description="Run a TFLite detection model over an image folder and "
                    "write a sevseg detection file.")
    parser.add_argument("--model", required=True, help="path to the .tflite model")
    parser.add_argument("--images", required=True, help="directory of input images")
    parser.add_argument("--out", required=True, help="output detection JSON path")
    parser.add_argument("--input-size", type=int, default=None,
                        help="override the model input side length")
    parser.add_argument("--score-floor", type=float, default=0.0,
                        help="drop detections below this score (default keeps all)")
    parser.add_argument("--class-offset", type=int, default=0,
                        help="added to raw class ids, e.g. -1 for 1-based models")
    return parser


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = BridgeConfig(model_path=Path(args.model),
                              images_dir=Path(args.images),
                              out_path=Path(args.out),
                              input_size=args.input_size,
                              score_floor=args.score_floor,
                              class_offset=args.class_offset)
        failures = export_detections(config)
    except BridgeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2
    if failures:
        print(f"error: {failures} image(s) failed", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
