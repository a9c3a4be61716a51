"""CLI: embextract extract --input DIR --depths 64,192,768,2048 --out DIR
--extractor-id ID [--checkpoint PATH]"""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractionJob, extract
from .model import DEPTHS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embextract")
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("extract", help="write EMB1 embedding files")
    p.add_argument("--input", required=True, help="directory of image crops")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--extractor-id", required=True,
                   help="stable identifier for the checkpoint in use")
    p.add_argument("--depths", default=",".join(str(d) for d in DEPTHS),
                   help="comma-separated subset of 64,192,768,2048")
    p.add_argument("--checkpoint", help="Inception V3 state-dict file; "
                                        "omitted = seeded random init")
    p.add_argument("--seed", type=int, default=0,
                   help="weight-init seed when no checkpoint is given")
    p.add_argument("--source-collection", default="",
                   help="collection name recorded in the sidecars")
    p.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        depths = tuple(int(d) for d in args.depths.split(","))
        job = ExtractionJob(
            input_dir=args.input, output_dir=args.out,
            extractor_id=args.extractor_id, depths=depths,
            source_collection=args.source_collection,
            checkpoint=args.checkpoint, seed=args.seed,
            batch_size=args.batch_size)
        written = extract(job)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for depth in sorted(written):
        print(f"wrote {written[depth]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
