"""Command-line surface.

Verbs: ingest, split, color-gap, texture-gap, fid, classify-report, full.
Stage verbs take the same config file as `full` and run a single stage.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, load_config
from .manifest import (DEFAULT_GRAYSCALE_THRESHOLD, parse_manifest,
                       split_day_night, subsample_class, write_manifest)
from .pipeline import StageError, run_full, write_report


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True):
    parser.add_argument("--config", required=config_required,
                        help="TOML or JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the top-level seed")
    parser.add_argument("--out-dir", help="override the output directory")
    parser.add_argument("--workers", type=int, help="bounded worker count")
    parser.add_argument("--per-image-mean", action="store_true",
                        help="report the mean of per-image correlations "
                             "instead of correlating aggregates")


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.workers is not None:
        cfg.workers = args.workers
    if args.per_image_mean:
        cfg.color.per_image_mean = True
    return cfg


def _run_stages(args, stages: list[str] | None) -> int:
    cfg = _load(args)
    if stages is not None:
        cfg.stages = stages
    try:
        report = run_full(cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    paths = write_report(report, cfg.out_dir)
    for path in paths:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="domaingap",
        description="Quantify the domain gap between image collections.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="parse a manifest and rewrite it "
                                      "deterministically, optionally subsampling a class")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--subsample-class", help="class label to reduce")
    p.add_argument("--subsample-n", type=int, help="target count for the class")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("split", help="tag every record day or night")
    p.add_argument("--manifest", required=True)
    p.add_argument("--images-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float,
                   default=DEFAULT_GRAYSCALE_THRESHOLD,
                   help="grayscale-spread night threshold (fraction of 255)")

    for verb, stages in (("color-gap", ["color"]), ("texture-gap", ["texture"]),
                         ("fid", ["fid"]), ("classify-report", ["classification"]),
                         ("full", None)):
        p = sub.add_parser(verb)
        _add_common(p)
        p.set_defaults(stages=stages)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "ingest":
            manifest = parse_manifest(args.manifest)
            if args.subsample_class:
                if args.subsample_n is None:
                    print("error: --subsample-n required with --subsample-class",
                          file=sys.stderr)
                    return 2
                manifest = subsample_class(manifest, args.subsample_class,
                                           args.subsample_n, args.seed)
            write_manifest(manifest, args.out)
            print(f"wrote {args.out}: {len(manifest.records)} records, "
                  f"{len(manifest.categories)} categories, "
                  f"{len(manifest.locations)} locations")
            return 0
        if args.verb == "split":
            manifest = parse_manifest(args.manifest)
            manifest = split_day_night(manifest, args.images_root, args.threshold)
            write_manifest(manifest, args.out)
            day = sum(r.day_night.value == "day" for r in manifest.records)
            print(f"wrote {args.out}: {day} day / "
                  f"{len(manifest.records) - day} night")
            return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return _run_stages(args, args.stages)


if __name__ == "__main__":
    sys.exit(main())
