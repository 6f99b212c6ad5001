"""Command-line entry point.

    semcom-export export --prompts captions.txt --out bundles/ \
        [--raw] [--score-sweep 0,500,1000] [--seed N] [--size N] [--steps N]

Exit codes: 0 on success, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .backend import BackendError
from .export import ExportError, ExportJob, run_job


def _parse_sweep(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ExportError(f"bad score sweep: {text!r}")


def _read_prompts(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ExportError(f"cannot read prompts file: {exc}")
    return [line.strip() for line in lines if line.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semcom-export")
    sub = parser.add_subparsers(dest="command", required=True)
    exp = sub.add_parser("export", help="export bundles (and optional score tables)")
    exp.add_argument("--prompts", required=True, help="text file, one prompt per line")
    exp.add_argument("--out", required=True, help="output directory")
    exp.add_argument("--raw", action="store_true", help="keep raw score stacks")
    exp.add_argument("--score-sweep", default="", help="comma-separated token budgets")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--size", type=int, default=64, help="image edge length in pixels")
    exp.add_argument("--steps", type=int, default=25, help="diffusion step count")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(prompts=_read_prompts(args.prompts), out_dir=args.out,
                        budgets=_parse_sweep(args.score_sweep), raw=args.raw,
                        seed=args.seed, steps=args.steps, image_size=args.size)
        bundle_dirs = run_job(job)
    except (ExportError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in bundle_dirs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
