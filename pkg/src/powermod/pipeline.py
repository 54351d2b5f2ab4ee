"""End-to-end pipeline: generate/load, select counters, filter, train, evaluate.

Every run writes its fully-resolved configuration next to the outputs and a
manifest listing each artifact with a content hash. All stages are seeded,
so a rerun of the same configuration produces byte-identical artifacts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import _kernels, __version__
from .core import (
    Dataset,
    NormalizedDataset,
    TraceVectors,
    Vector,
    normalize_dataset,
    project_dataset,
)
from .errors import ConfigError, PowermodError, StageError
from .evaluate import EvalConfig, run_experiment
from .forest import ForestConfig
from .ingest import export_dataset, load_dataset, save_trace
from .models import KINDS, save_model, train_model
from .noisefilter import NoiseConfig, filter_dataset
from .selection import select_counters
from .synth import GroundTruth, SynthSpec, generate_traces, score_filter
from .util import dump_json, load_json, sha256_file

log = logging.getLogger("powermod.pipeline")


@dataclass
class PipelineConfig:
    seed: int = 42
    synth_spec: SynthSpec | None = None
    dataset_dir: str | None = None
    n_select: int = 6
    subsets: int = 4
    forest: ForestConfig = field(default_factory=ForestConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    models: tuple[str, ...] = KINDS
    apply_filter: bool = True
    emit_csv: bool = False
    eval_overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if (self.synth_spec is None) == (self.dataset_dir is None):
            raise ConfigError("exactly one of synth_spec or dataset_dir is required")
        unknown = [m for m in self.models if m not in KINDS]
        if unknown:
            raise ConfigError(f"unknown model kinds {unknown}; expected subset of {KINDS}")
        if not self.models:
            raise ConfigError("at least one model kind is required")

    def eval_config(self) -> EvalConfig:
        return EvalConfig(seed=self.seed, bounds=self.noise.bounds, **self.eval_overrides)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "synth_spec": self.synth_spec.to_json_dict() if self.synth_spec else None,
            "dataset_dir": self.dataset_dir,
            "n_select": self.n_select,
            "subsets": self.subsets,
            "forest": {
                "ntree": self.forest.ntree,
                "max_depth": self.forest.max_depth,
                "min_samples_leaf": self.forest.min_samples_leaf,
                "mtry": self.forest.mtry,
                "bootstrap": self.forest.bootstrap,
                "rng_seed": self.forest.rng_seed,
            },
            "noise": self.noise.to_json_dict(),
            "models": list(self.models),
            "apply_filter": self.apply_filter,
            "emit_csv": self.emit_csv,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PipelineConfig":
        forest = data.get("forest", {})
        return cls(
            seed=int(data.get("seed", 42)),
            synth_spec=SynthSpec.from_json_dict(data["synth_spec"])
            if data.get("synth_spec")
            else None,
            dataset_dir=data.get("dataset_dir"),
            n_select=int(data.get("n_select", 6)),
            subsets=int(data.get("subsets", 4)),
            forest=ForestConfig(
                ntree=forest.get("ntree", 16),
                max_depth=forest.get("max_depth"),
                min_samples_leaf=forest.get("min_samples_leaf", 5),
                mtry=forest.get("mtry"),
                bootstrap=forest.get("bootstrap", True),
                rng_seed=forest.get("rng_seed", 0),
            ),
            noise=NoiseConfig.from_json_dict(data.get("noise", {})),
            models=tuple(data.get("models", KINDS)),
            apply_filter=bool(data.get("apply_filter", True)),
            emit_csv=bool(data.get("emit_csv", False)),
        )


def _raw_vectors_by_ref(dataset: Dataset) -> dict:
    return {v.ref: v for tv in dataset.traces for v in tv.vectors}


def _filtered_raw_dataset(raw: Dataset, filtered: NormalizedDataset) -> Dataset:
    """Raw-rate dataset matching the filtered one (counters are untouched by
    the filter, powers may be corrected, removed vectors are gone)."""
    raw_by_ref = _raw_vectors_by_ref(raw)
    traces = []
    for tv in filtered.traces:
        vectors = [
            Vector(
                p_dynamic=v.p_dynamic,
                counters=raw_by_ref[v.ref].counters,
                trace_id=v.trace_id,
                seq=v.seq,
            )
            for v in tv.vectors
        ]
        traces.append(
            TraceVectors(
                trace_id=tv.trace_id,
                meter_kind=tv.meter_kind,
                p_static=tv.p_static,
                vectors=vectors,
                n_rejected=tv.n_rejected,
            )
        )
    return Dataset(schema=filtered.schema, traces=traces)


def _write_records_csv(records, path: Path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model", "fold", "scope", "trace_id", "seq", "measured", "predicted", "ape_pct"]
        )
        for r in records:
            writer.writerow(
                [
                    r.model,
                    r.fold,
                    r.scope,
                    r.trace_id,
                    r.seq,
                    repr(r.measured),
                    repr(r.predicted),
                    repr(r.ape),
                ]
            )


def run_pipeline(config: PipelineConfig, out_dir: str | Path) -> dict:
    """Run all stages into ``out_dir``; returns the manifest dict."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []

    def emit(path: Path) -> None:
        artifacts.append(path)

    dump_json(config.to_json_dict(), out / "config.json")
    emit(out / "config.json")

    truth: GroundTruth | None = None
    stage = "synth" if config.synth_spec else "ingest"
    try:
        if config.synth_spec:
            traces, truth = generate_traces(config.synth_spec)
            data_dir = out / "dataset"
            for trace in traces:
                csv_path = save_trace(trace, data_dir, config.synth_spec.schema)
                emit(csv_path)
                emit(csv_path.with_suffix(".json"))
            dump_json(truth.to_json_dict(), data_dir / "ground_truth.json")
            emit(data_dir / "ground_truth.json")
            dump_json(config.synth_spec.to_json_dict(), data_dir / "spec.json")
            emit(data_dir / "spec.json")
            dataset = load_dataset(data_dir)
        else:
            dataset = load_dataset(config.dataset_dir)
            truth_path = Path(config.dataset_dir) / "ground_truth.json"
            if truth_path.exists():
                truth = GroundTruth.from_json_dict(load_json(truth_path))
        log.info("%s: %d vectors in %d traces", stage, len(dataset), len(dataset.traces))

        stage = "select"
        selected, importance_report = select_counters(
            dataset, config.n_select, config.forest, config.subsets
        )
        dump_json(importance_report.to_json_dict(), out / "importance.json")
        emit(out / "importance.json")
        log.info("select: %s", selected)
        projected = project_dataset(dataset, selected)

        stage = "filter"
        normalized = normalize_dataset(projected)
        if config.apply_filter:
            filtered, filter_report = filter_dataset(normalized, config.noise)
            dump_json(filter_report.to_json_dict(), out / "filter_report.json")
            emit(out / "filter_report.json")
            filtered_dir = out / "filtered"
            for path in export_dataset(_filtered_raw_dataset(projected, filtered), filtered_dir):
                emit(path)
                emit(path.with_suffix(".json"))
            log.info(
                "filter: %d corrected, %d removed",
                filter_report.n_corrected_halved + filter_report.n_corrected_blended,
                filter_report.n_removed_outliers,
            )
            if truth is not None:
                score = score_filter(filter_report, truth)
                dump_json(
                    {
                        "kinds": {
                            kind: {
                                "precision": ks.precision,
                                "recall": ks.recall,
                                "n_true": ks.n_true,
                                "n_predicted": ks.n_predicted,
                                "no_positives": ks.no_positives,
                                "rmse_corrected": ks.rmse_corrected,
                                "mean_rel_corrected": ks.mean_rel_corrected,
                            }
                            for kind, ks in score.kinds.items()
                        },
                        "false_removal_rate": score.false_removal_rate,
                        "n_clean": score.n_clean,
                    },
                    out / "filter_score.json",
                )
                emit(out / "filter_score.json")
        else:
            filtered = normalized

        stage = "train"
        x = filtered.counter_matrix()
        y = filtered.power_array()
        eval_cfg = config.eval_config()
        models_dir = out / "models"
        for kind in config.models:
            model = train_model(
                kind,
                x,
                y,
                filtered.schema,
                filtered.params,
                svr_config=eval_cfg.tspm_svr if kind == "tspm" and eval_cfg.tspm_svr else eval_cfg.svr,
                nn_config=eval_cfg.nn,
                lr_intercept=eval_cfg.lr_intercept,
            )
            emit(save_model(model, models_dir / f"{kind}.json"))
        log.info("train: %s", ", ".join(config.models))

        stage = "eval"
        report = run_experiment(
            filtered, list(config.models), eval_cfg, keep_records=config.emit_csv
        )
        dump_json(report.to_json_dict(), out / "report.json")
        emit(out / "report.json")
        if config.emit_csv:
            _write_records_csv(report.records, out / "per_vector_errors.csv")
            emit(out / "per_vector_errors.csv")
        for kind in config.models:
            log.info(
                "eval %s: known %.2f%% unknown %.2f%% all %.2f%%",
                kind,
                report.mean_ape(kind, "known"),
                report.mean_ape(kind, "unknown"),
                report.mean_ape(kind, "all"),
            )
    except PowermodError:
        raise
    except Exception as exc:  # pragma: no cover - defensive stage wrapper
        raise StageError(stage, str(exc)) from exc

    manifest = {
        "version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "artifacts": sorted(
            ({"path": str(p.relative_to(out)), "sha256": sha256_file(p)} for p in artifacts),
            key=lambda a: a["path"],
        ),
    }
    dump_json(manifest, out / "manifest.json")
    return manifest
