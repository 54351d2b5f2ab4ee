"""powermod command line.

Subcommands: synth, select, filter, train, eval, pipeline, report.
Exit codes: 0 success, 1 usage error, 2 data/config error. Logs go to
stderr; artifacts to the paths given. POWERMOD_THREADS caps parallelism.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import normalize_dataset
from .errors import PowermodError
from .evaluate import run_experiment
from .forest import ForestConfig
from .ingest import export_dataset, load_dataset, save_trace
from .models import KINDS, save_model, train_model
from .noisefilter import NoiseConfig, filter_dataset
from .pipeline import PipelineConfig, _filtered_raw_dataset, _write_records_csv, run_pipeline
from .reporting import render_report
from .selection import select_counters
from .synth import SynthSpec, default_spec, generate_traces
from .util import dump_json, load_json

log = logging.getLogger("powermod.cli")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 (argparse's default would be 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _model_list(text: str) -> list[str]:
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    bad = [k for k in kinds if k not in KINDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown models {bad}; choose from {','.join(KINDS)}")
    if not kinds:
        raise argparse.ArgumentTypeError("need at least one model")
    return kinds


def build_parser() -> _Parser:
    parser = _Parser(prog="powermod", description=__doc__)
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic trace dataset")
    p.add_argument("--spec", help="synth spec JSON; omit to use the built-in default spec")
    p.add_argument("--seed", type=int, default=42, help="seed for the default spec")
    p.add_argument("--out", required=True, help="output dataset directory")

    p = sub.add_parser("select", help="rank counters by forest importance")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--ntree", type=int, default=16)
    p.add_argument("--subsets", type=int, default=4)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--random-partitions", action="store_true")
    p.add_argument("--out", required=True, help="importance JSON path")

    p = sub.add_parser("filter", help="correct/remove noisy vectors")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="noise filter config JSON")
    p.add_argument("--out", required=True, help="filtered dataset directory")
    p.add_argument("--report", help="filter report JSON path")

    p = sub.add_parser("train", help="train model artifacts on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--models", type=_model_list, default=list(KINDS))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="directory for model JSON artifacts")

    p = sub.add_parser("eval", help="fold-rotation evaluation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--models", type=_model_list, default=list(KINDS))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--emit-csv", action="store_true", help="also write flat per-vector tables")

    p = sub.add_parser("pipeline", help="synth/ingest + select + filter + train + eval")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="synth spec JSON (or 'default')")
    src.add_argument("--dataset", help="existing dataset directory")
    src.add_argument("--config", help="pipeline config JSON (e.g. a previous run's config.json)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--models", type=_model_list, default=list(KINDS))
    p.add_argument("--n", type=int, default=6, help="counters to select")
    p.add_argument("--ntree", type=int, default=16)
    p.add_argument("--subsets", type=int, default=4)
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--emit-csv", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="render CSV tables from a report JSON")
    p.add_argument("--report", required=True)
    p.add_argument("--compare", help="unfiltered-run report JSON for a filter-effect table")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _cmd_synth(args) -> int:
    if args.spec and args.spec != "default":
        spec = SynthSpec.from_json_dict(load_json(args.spec))
    else:
        spec = default_spec(seed=args.seed)
    traces, truth = generate_traces(spec)
    out = Path(args.out)
    for trace in traces:
        save_trace(trace, out, spec.schema)
    dump_json(truth.to_json_dict(), out / "ground_truth.json")
    dump_json(spec.to_json_dict(), out / "spec.json")
    log.info("wrote %d traces to %s", len(traces), out)
    return 0


def _cmd_select(args) -> int:
    dataset = load_dataset(args.dataset)
    cfg = ForestConfig(ntree=args.ntree, rng_seed=args.seed)
    selected, report = select_counters(
        dataset, args.n, cfg, args.subsets, random_partitions=args.random_partitions
    )
    dump_json(report.to_json_dict(), args.out)
    print(",".join(selected))
    return 0


def _cmd_filter(args) -> int:
    dataset = load_dataset(args.dataset)
    cfg = NoiseConfig.from_json_dict(load_json(args.config)) if args.config else NoiseConfig()
    normalized = normalize_dataset(dataset)
    filtered, report = filter_dataset(normalized, cfg)
    export_dataset(_filtered_raw_dataset(dataset, filtered), args.out)
    if args.report:
        dump_json(report.to_json_dict(), args.report)
    log.info(
        "filtered %d -> %d vectors (%d corrected, %d removed)",
        report.n_input,
        report.n_input - report.n_removed_outliers,
        report.n_corrected_halved + report.n_corrected_blended,
        report.n_removed_outliers,
    )
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    normalized = normalize_dataset(dataset)
    x = normalized.counter_matrix()
    y = normalized.power_array()
    from .evaluate import EvalConfig

    eval_cfg = EvalConfig(seed=args.seed)
    out = Path(args.out)
    for kind in args.models:
        model = train_model(
            kind,
            x,
            y,
            normalized.schema,
            normalized.params,
            svr_config=eval_cfg.tspm_svr if kind == "tspm" and eval_cfg.tspm_svr else eval_cfg.svr,
            nn_config=eval_cfg.nn,
        )
        path = save_model(model, out / f"{kind}.json")
        log.info("wrote %s", path)
    return 0


def _cmd_eval(args) -> int:
    dataset = load_dataset(args.dataset)
    normalized = normalize_dataset(dataset)
    from .evaluate import EvalConfig

    report = run_experiment(
        normalized, args.models, EvalConfig(seed=args.seed), keep_records=args.emit_csv
    )
    dump_json(report.to_json_dict(), args.out)
    if args.emit_csv:
        _write_records_csv(report.records, Path(args.out).with_suffix(".csv"))
    for kind in args.models:
        print(
            f"{kind}: known {report.mean_ape(kind, 'known'):.2f}% "
            f"unknown {report.mean_ape(kind, 'unknown'):.2f}% "
            f"all {report.mean_ape(kind, 'all'):.2f}%"
        )
    return 0


def _cmd_pipeline(args) -> int:
    if args.config:
        config = PipelineConfig.from_json_dict(load_json(args.config))
    else:
        if args.spec:
            if args.spec == "default":
                spec = default_spec(seed=args.seed)
            else:
                spec = SynthSpec.from_json_dict(load_json(args.spec))
            config = PipelineConfig(seed=args.seed, synth_spec=spec)
        else:
            config = PipelineConfig(seed=args.seed, dataset_dir=args.dataset)
        config.models = tuple(args.models)
        config.n_select = args.n
        config.subsets = args.subsets
        config.forest = ForestConfig(ntree=args.ntree, rng_seed=args.seed)
        config.apply_filter = not args.no_filter
        config.emit_csv = args.emit_csv
    run_pipeline(config, args.out)
    print(f"pipeline complete: {args.out}/manifest.json")
    return 0


def _cmd_report(args) -> int:
    report = load_json(args.report)
    compare = load_json(args.compare) if args.compare else None
    for path in render_report(report, args.out, compare):
        log.info("wrote %s", path)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "select": _cmd_select,
    "filter": _cmd_filter,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "pipeline": _cmd_pipeline,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except PowermodError as exc:
        print(f"powermod {args.command}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"powermod {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
