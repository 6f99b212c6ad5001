"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 runtime error. The
``SEMCOM_SEED`` environment variable overrides the scenario seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import add as add_mod
from .bundle import BundleError, load_bundle
from .harness import (ConfigError, DbscanParams, ExperimentReport, build_alloc_env,
                      export_matrices_csv, load_scenario, run_allocation_experiment,
                      run_pipeline, run_simulation)
from .metrics import ScoringError
from .packing import dump_stream, reduction_ratio, truncate


def _seed_override() -> int | None:
    raw = os.environ.get("SEMCOM_SEED")
    return int(raw) if raw else None


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--xi-propn", type=float, default=0.9)
    p.add_argument("--xi-nn", type=float, default=0.8)
    p.add_argument("--xi-default", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=2.0)
    p.add_argument("--min-neighbors", type=int, default=5)
    p.add_argument("--min-cluster-size", type=int, default=30)


def _pipeline(args):
    bundle = load_bundle(args.bundle)
    scheme = {"PROPN": args.xi_propn, "NN": args.xi_nn, "default": args.xi_default}
    params = DbscanParams(eps=args.eps, min_neighbors=args.min_neighbors,
                          min_cluster_size=args.min_cluster_size)
    return bundle, run_pipeline(bundle, scheme, params)


def cmd_extract(args) -> int:
    bundle, result = _pipeline(args)
    words = {w.index: w.text for w in bundle.words}
    print(f"prompt: {bundle.prompt}")
    print(f"retained words: {len(result.importance.order)}")
    for idx, s in zip(result.importance.order, result.importance.s):
        seg = result.segments[idx]
        print(f"  [{words[idx]}] importance={s:.4f} segment={len(seg.pixels)} px")
    ratio = reduction_ratio(result.info, (bundle.image_width, bundle.image_height))
    print(f"semantic info: {result.info.total_tokens} tokens "
          f"(reduction {100 * ratio:.1f}%)")
    if args.dump_stream:
        with open(args.dump_stream, "wb") as fh:
            fh.write(dump_stream(result.info))
        print(f"wrote token stream to {args.dump_stream}")
    if args.csv_matrices:
        export_matrices_csv(bundle, result, args.csv_matrices)
        print(f"wrote matrices to {args.csv_matrices}")
    return 0


def cmd_pack(args) -> int:
    bundle, result = _pipeline(args)
    words = {w.index: w.text for w in bundle.words}
    print("block order (descending importance):")
    for idx, pixels in result.info.blocks:
        print(f"  [{words[idx]}] {len(pixels)} fresh tokens")
    budget = args.budget if args.budget is not None else result.info.total_tokens
    prefix = truncate(result.info, budget)
    print(f"prefix at budget {budget}: {prefix.tokens_used} tokens")
    for idx in result.importance.order:
        print(f"  [{words[idx]}] coverage={prefix.coverage[idx]:.3f}")
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario, seed_override=_seed_override())
    report = run_simulation(scenario)
    report.to_csv(args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_train_add(args) -> int:
    scenario = load_scenario(args.scenario, seed_override=_seed_override())
    env = build_alloc_env(scenario)
    result = add_mod.train(env, scenario.add)
    add_mod.save_checkpoint(args.out, result.policy, result.critics)
    print(f"wrote checkpoint {args.out}")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("episode,reward\n")
            for episode, reward in enumerate(result.rewards):
                fh.write(f"{episode},{reward!r}\n")
        print(f"wrote reward trace {args.trace}")
    return 0


def cmd_eval(args) -> int:
    scenario = load_scenario(args.scenario, seed_override=_seed_override())
    policies = {}
    for spec in args.policy:
        if spec in ("fixed", "random", "greedy"):
            policies[spec] = "greedy_table" if spec == "greedy" else spec
        else:
            policy, _ = add_mod.load_checkpoint(spec)
            policies[os.path.basename(spec)] = policy
    report = run_allocation_experiment(scenario, policies, n_states=args.states)
    report.to_csv(args.out)
    print(f"wrote {args.out}")
    for name in sorted(report.aggregates):
        print(f"{name}={report.aggregates[name]:.4f}")
    return 0


def cmd_report(args) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if args.format == "csv":
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
        return 0
    # svg: plot the second column against the first, skipping comments
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header = None
    xs, ys = [], []
    for ln in lines:
        if not ln or ln.startswith("#"):
            continue
        cells = ln.split(",")
        if header is None:
            header = cells
            continue
        try:
            xs.append(float(cells[0]))
            ys.append(float(cells[1]))
        except ValueError:
            continue
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys)
    if header and len(header) >= 2:
        ax.set_xlabel(header[0])
        ax.set_ylabel(header[1])
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semcom")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run the extraction pipeline on one bundle")
    p.add_argument("bundle")
    _add_pipeline_args(p)
    p.add_argument("--dump-stream", metavar="PATH")
    p.add_argument("--csv-matrices", metavar="DIR")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("pack", help="show the packed block order and a budget prefix")
    p.add_argument("bundle")
    _add_pipeline_args(p)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("simulate", help="channel-limited transmission report")
    p.add_argument("scenario")
    p.add_argument("--out", default="report.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train-add", help="train the diffusion allocator")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_train_add)

    p = sub.add_parser("eval", help="compare allocation policies")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", action="append", required=True,
                   help="checkpoint path or one of fixed|random|greedy")
    p.add_argument("--states", type=int, default=50)
    p.add_argument("--out", default="eval.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="re-emit a report as CSV or an SVG plot")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["csv", "svg"], default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, BundleError, ScoringError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
