"""Command line entry point.

    extract --images DIR --out FILE [--model NAME] [--layer TAG]
            [--weights SOURCE] [--seed N] [--batch-size N]

Exit codes: 0 success, 1 usage error, 2 extraction or IO failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .errors import ExtractorError
from .extract import ExtractionJob, run_job
from .models import DEFAULT_LAYER, DEFAULT_MODEL, available_layers, available_models


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; 2 is reserved for runtime failures
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="extract",
        description="Embed a directory of images into an IFV1 vector file.",
    )
    parser.add_argument("--images", required=True, metavar="DIR",
                        help="directory of input images")
    parser.add_argument("--out", required=True, metavar="FILE",
                        help="output IFV1 path (a .meta.json sidecar is added)")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        choices=available_models(),
                        help="backbone (default %(default)s)")
    parser.add_argument("--layer", default=DEFAULT_LAYER,
                        choices=available_layers(),
                        help="tap to embed (default %(default)s)")
    parser.add_argument("--weights", default="imagenet", metavar="SOURCE",
                        help="imagenet, random, or a state-dict path "
                             "(default %(default)s)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for --weights random (default %(default)s)")
    parser.add_argument("--batch-size", type=int, default=8, metavar="N",
                        help="images per forward pass (default %(default)s)")
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="only log warnings and errors")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        job = ExtractionJob(
            image_dir=args.images,
            out_path=args.out,
            model=args.model,
            layer=args.layer,
            batch_size=args.batch_size,
            weights=args.weights,
            seed=args.seed,
        )
    except ExtractorError as exc:
        # malformed arguments (bad batch size and friends) are usage errors
        parser.error(str(exc))
    try:
        result = run_job(job)
    except (ExtractorError, OSError) as exc:
        print(f"extract: error: {exc}", file=sys.stderr)
        return 2
    print(f"{result.out_path}\t{result.count} vectors\tdim {result.dim}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
