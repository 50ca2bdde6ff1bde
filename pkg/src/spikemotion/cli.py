"""Command line entry point.

    spikemotion run --dataset DIR --out DIR [--kernel v1|v2] [--lanes N]
                    [--bench] [--seed S] [--config FILE] [--set key=value ...]
    spikemotion rank --dataset DIR --method NAME=RESULTS_DIR ... --out DIR
    spikemotion synth --out DIR

``run`` is implied when the first argument is an option.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import compute_metrics, rank_methods, write_metrics_csv, write_ranks_csv, write_timing_csv
from .config import RunConfig, apply_assignments, parse_assignments, read_config_file
from .pipeline import (
    SequenceError,
    category_metrics,
    evaluate_results,
    load_dataset,
    process_sequence,
)
from .snn import KERNELS
from .synthetic import moving_square_sequence, write_sequence

log = logging.getLogger("spikemotion")

TIMING_CSV = "timing.csv"
METRICS_CSV = "metrics.csv"
RANKS_CSV = "ranks.csv"


def run(cfg, root):
    """Process every sequence under ``root``; returns the process exit status."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = load_dataset(root)
    if not specs:
        log.warning("no sequences found under %s", root)

    timing_rows = []
    per_sequence = {}
    failed = []
    for spec in specs:
        log.info("processing %s", spec.name)
        try:
            result = process_sequence(spec, cfg)
        except SequenceError as exc:
            log.error("%s aborted: %s", spec.name, exc)
            failed.append(spec.name)
            continue
        timing_rows.append((spec.name, result.num_images, result.height, result.width, result.stats))
        if result.counts is not None:
            per_sequence.setdefault(spec.category, []).append(compute_metrics(result.counts))

    write_timing_csv(out_dir / TIMING_CSV, timing_rows)
    if cfg.bench:
        if per_sequence:
            _write_reports(out_dir, {cfg.method: category_metrics(per_sequence)})
        else:
            log.warning("--bench given but no sequence has ground truth; wrote timing only")
    if failed:
        log.error("%d sequence(s) aborted: %s", len(failed), ", ".join(failed))
        return 1
    return 0


def _write_reports(out_dir, by_method):
    """``by_method``: ``{method: {category: MetricSet}}``."""
    values = {(m, c): ms for m, cats in by_method.items() for c, ms in cats.items()}
    rows = [(m, c, values[(m, c)]) for m, c in sorted(values)]
    write_metrics_csv(out_dir / METRICS_CSV, rows)
    write_ranks_csv(out_dir / RANKS_CSV, rank_methods(values))


def rank(root, methods, out_dir):
    """Score several result trees against the ground truth under ``root``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = load_dataset(root)
    by_method = {}
    for name, results in methods.items():
        per_sequence = evaluate_results(specs, results)
        if not per_sequence:
            log.error("no ground truth found under %s", root)
            return 1
        by_method[name] = category_metrics(per_sequence)
    _write_reports(out_dir, by_method)
    return 0


def _parse_method(text):
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=RESULTS_DIR, got {text!r}")
    return name, Path(path)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser = argparse.ArgumentParser(prog="spikemotion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="detect motion in every sequence of a dataset")
    p_run.add_argument("--dataset", required=True, type=Path)
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--kernel", choices=KERNELS)
    p_run.add_argument("--lanes", type=int)
    p_run.add_argument("--bench", action="store_true", help="score against ground truth")
    p_run.add_argument("--seed", type=int, help="background model seed")
    p_run.add_argument("--method", default="spikemotion", help="method name in the reports")
    p_run.add_argument("--config", type=Path, help="key=value configuration file")
    p_run.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one configuration key (repeatable)",
    )

    p_rank = sub.add_parser("rank", parents=[common], help="rank existing result trees")
    p_rank.add_argument("--dataset", required=True, type=Path)
    p_rank.add_argument("--method", dest="methods", action="append", required=True,
                        type=_parse_method, metavar="NAME=RESULTS_DIR")
    p_rank.add_argument("--out", required=True, type=Path)

    p_synth = sub.add_parser("synth", parents=[common], help="write a synthetic moving-square dataset")
    p_synth.add_argument("--out", required=True, type=Path)
    p_synth.add_argument("--frames", type=int, default=200)
    p_synth.add_argument("--size", type=int, default=64)
    p_synth.add_argument("--warmup", type=int, default=20)
    p_synth.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args):
    assignments = read_config_file(args.config) if args.config else {}
    assignments.update(parse_assignments(args.overrides, source="--set"))
    cfg = apply_assignments(RunConfig(), assignments)
    updates = {"out_dir": args.out, "bench": args.bench, "method": args.method}
    if args.kernel is not None:
        updates["kernel"] = args.kernel
    if args.lanes is not None:
        updates["lanes"] = args.lanes
    if args.seed is not None:
        updates["dbs"] = replace(cfg.dbs, seed=args.seed)
    return replace(cfg, **updates)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("-") and argv[0] not in ("-h", "--help"):
        argv.insert(0, "run")
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "run":
            return run(config_from_args(args), args.dataset)
        if args.command == "rank":
            return rank(args.dataset, dict(args.methods), args.out)
        frames, gts = moving_square_sequence(
            n_frames=args.frames, size=args.size, warmup=args.warmup, seed=args.seed
        )
        write_sequence(args.out, "synthetic", "movingSquare", frames, gts,
                       temporal_roi=(args.warmup + 1, args.frames))
        return 0
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
