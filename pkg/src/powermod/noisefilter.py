"""Rule-based noise filter for sampled power vectors.

Boundary-sampled power meters misreport an interval in three recognizable
ways, and each gets its own treatment:

* halved readings: activity started or stopped mid-interval, so averaging
  the boundary sensor readings yields half the neighbouring level while the
  counters show the true activity fraction. The power is rescaled by the
  first counter's ratio to the normal neighbour.
* blended readings: the interval straddles a change between two activity
  levels; the boundary average misses the actual split fraction. The power
  is re-interpolated between the neighbours at the fraction the counters
  indicate.
* power outliers: sensor glitches where similar counter activity comes with
  wildly different power. These vectors are removed.

The pipeline is: cluster on power+counters, mark vectors of groups that
contain a consecutive run as normal, correct halved then blended readings
against normal neighbours, re-cluster on counters only, and drop members
whose power strays from the normal members of their group. Corrections only
ever touch the power value; counters are never modified. Normal status is
fixed once after step 2: corrected vectors are not re-qualified, and normal
vectors are never flagged (which also makes the filter a no-op on clean
data).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .cluster import VectorGroup, cluster_counters_only, cluster_vectors
from .core import (
    MeterKind,
    NormalizedDataset,
    NormalizedVector,
    SimilarityBounds,
    TraceVectors,
    power_ratio_ok,
)
from .util import thread_map

_DEGENERATE = 1e-9

KIND_HALVED = "halved"
KIND_BLENDED = "blended"
KIND_OUTLIER = "outlier"


@dataclass(frozen=True)
class NoiseConfig:
    """Tolerances for the filter's approximate-equality tests.

    ``eps_half`` bounds the relative gap in the half/midpoint power tests,
    ``eps_ratio`` bounds the mutual spread of the per-counter ratios,
    ``delta_half`` is the exclusion margin around 0.5 for those ratios, and
    ``consecutive_run`` is the run length that makes a group normal.
    ``boundary_correction`` picks which traces get the halved/blended steps:
    "auto" (power-sensor traces only), "all", or "none".
    """

    bounds: SimilarityBounds = field(default_factory=SimilarityBounds)
    eps_half: float = 0.1
    eps_ratio: float = 0.1
    delta_half: float = 0.05
    consecutive_run: int = 2
    outlier_bounds: SimilarityBounds = field(default_factory=lambda: SimilarityBounds(0.7))
    boundary_correction: str = "auto"
    ratio_source: str = "first"  # "first" counter drives corrections, or "mean"

    def __post_init__(self):
        for name in ("eps_half", "eps_ratio", "delta_half"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must be in (0, 1)")
        if self.consecutive_run < 2:
            raise ValueError("consecutive_run must be >= 2")
        if self.boundary_correction not in ("auto", "all", "none"):
            raise ValueError("boundary_correction must be auto|all|none")
        if self.ratio_source not in ("first", "mean"):
            raise ValueError("ratio_source must be first|mean")

    def to_json_dict(self) -> dict:
        return {
            "a_v": self.bounds.a_v,
            "eps_half": self.eps_half,
            "eps_ratio": self.eps_ratio,
            "delta_half": self.delta_half,
            "consecutive_run": self.consecutive_run,
            "outlier_a_v": self.outlier_bounds.a_v,
            "boundary_correction": self.boundary_correction,
            "ratio_source": self.ratio_source,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NoiseConfig":
        return cls(
            bounds=SimilarityBounds(data.get("a_v", 0.9)),
            eps_half=data.get("eps_half", 0.1),
            eps_ratio=data.get("eps_ratio", 0.1),
            delta_half=data.get("delta_half", 0.05),
            consecutive_run=data.get("consecutive_run", 2),
            outlier_bounds=SimilarityBounds(data.get("outlier_a_v", 0.7)),
            boundary_correction=data.get("boundary_correction", "auto"),
            ratio_source=data.get("ratio_source", "first"),
        )


@dataclass(frozen=True)
class Annotation:
    ref: tuple[str, int]
    kind: str
    original_power: float
    corrected_power: float | None  # None when the vector was removed

    def to_json_dict(self) -> dict:
        return {
            "trace_id": self.ref[0],
            "seq": self.ref[1],
            "kind": self.kind,
            "original_power": self.original_power,
            "corrected_power": self.corrected_power,
        }


@dataclass
class FilterReport:
    n_input: int
    n_normal: int
    n_corrected_halved: int
    n_corrected_blended: int
    n_removed_outliers: int
    annotations: list[Annotation]
    config: NoiseConfig
    trace_ids: list[str]

    @property
    def n_untouched(self) -> int:
        return (
            self.n_input
            - self.n_corrected_halved
            - self.n_corrected_blended
            - self.n_removed_outliers
        )

    def refs_of(self, kind: str) -> set[tuple[str, int]]:
        return {a.ref for a in self.annotations if a.kind == kind}

    def to_json_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_normal": self.n_normal,
            "n_corrected_halved": self.n_corrected_halved,
            "n_corrected_blended": self.n_corrected_blended,
            "n_removed_outliers": self.n_removed_outliers,
            "annotations": [a.to_json_dict() for a in self.annotations],
            "config": self.config.to_json_dict(),
            "trace_ids": list(self.trace_ids),
        }


def identify_normal(groups: Sequence[VectorGroup], cfg: NoiseConfig) -> set[tuple[str, int]]:
    """Refs of all members of groups containing a same-trace adjacent-seq run.

    One run of length >= ``consecutive_run`` qualifies the whole group.
    """
    normal: set[tuple[str, int]] = set()
    for group in groups:
        by_trace: dict[str, list[int]] = {}
        for trace_id, seq in group.members:
            by_trace.setdefault(trace_id, []).append(seq)
        qualified = False
        for seqs in by_trace.values():
            seqs.sort()
            run = 1
            for prev, cur in zip(seqs, seqs[1:]):
                run = run + 1 if cur == prev + 1 else 1
                if run >= cfg.consecutive_run:
                    qualified = True
                    break
            if qualified:
                break
        if qualified:
            normal.update(group.members)
    return normal


def _ratio_stats(values: list[float], eps_ratio: float) -> tuple[bool, float]:
    """(mutually approximately equal?, mean) for a list of ratios."""
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    spread = float(arr.max() - arr.min())
    return spread <= eps_ratio * max(abs(mean), _DEGENERATE), mean


def _outside_half_band(mean_ratio: float, delta_half: float) -> bool:
    return not (0.5 - delta_half <= mean_ratio <= 0.5 + delta_half)


def correct_halved_readings(
    vectors: Sequence[NormalizedVector],
    normals: set[tuple[str, int]],
    cfg: NoiseConfig,
) -> tuple[list[NormalizedVector], list[Annotation]]:
    """Detect and rescale intervals whose boundary average halved the power.

    ``vectors`` is one trace in seq order. A non-normal vector is flagged
    when a normal neighbour exists whose power is about double, and the
    per-counter ratios agree with each other but not with 0.5. Boundary
    vectors use their single neighbour; the earlier neighbour is tried
    first.
    """
    out = list(vectors)
    annotations: list[Annotation] = []
    for i, v in enumerate(vectors):
        if v.ref in normals:
            continue
        for off in (-1, 1):
            ni = i + off
            if not (0 <= ni < len(vectors)):
                continue
            nbr = vectors[ni]
            if nbr.ref not in normals:
                continue
            p_nbr = nbr.p_dynamic
            if p_nbr <= 0.0:
                continue
            if abs(v.p_dynamic - p_nbr / 2.0) > cfg.eps_half * p_nbr:
                continue
            usable = [
                (k, v.counters[k] / nbr.counters[k])
                for k in range(v.counters.shape[0])
                if nbr.counters[k] >= _DEGENERATE
            ]
            if not usable:
                continue
            agree, mean_ratio = _ratio_stats([r for _, r in usable], cfg.eps_ratio)
            if not agree or not _outside_half_band(mean_ratio, cfg.delta_half):
                continue
            ratio = mean_ratio if cfg.ratio_source == "mean" else usable[0][1]
            corrected = p_nbr * ratio
            out[i] = replace(v, p_dynamic=corrected)
            annotations.append(
                Annotation(
                    ref=v.ref,
                    kind=KIND_HALVED,
                    original_power=v.p_dynamic,
                    corrected_power=corrected,
                )
            )
            break
    return out, annotations


def correct_blended_readings(
    vectors: Sequence[NormalizedVector],
    normals: set[tuple[str, int]],
    cfg: NoiseConfig,
    already_corrected: set[tuple[str, int]],
) -> tuple[list[NormalizedVector], list[Annotation]]:
    """Detect and re-interpolate intervals spanning a change in activity.

    Requires both neighbours normal. The interpolation fraction comes from
    the counters: f_k = (e_i - e_next) / (e_prev - e_next); coordinates with
    a degenerate denominator are skipped, and the first usable counter
    supplies the correction fraction.
    """
    out = list(vectors)
    annotations: list[Annotation] = []
    for i in range(1, len(vectors) - 1):
        v = vectors[i]
        if v.ref in normals or v.ref in already_corrected:
            continue
        prev = vectors[i - 1]
        nxt = vectors[i + 1]
        if prev.ref not in normals or nxt.ref not in normals:
            continue
        mid = (prev.p_dynamic + nxt.p_dynamic) / 2.0
        if mid <= 0.0:
            continue
        if abs(v.p_dynamic - mid) > cfg.eps_half * mid:
            continue
        usable = []
        for k in range(v.counters.shape[0]):
            denom = prev.counters[k] - nxt.counters[k]
            if abs(denom) < _DEGENERATE:
                continue
            usable.append((k, (v.counters[k] - nxt.counters[k]) / denom))
        if not usable:
            continue
        agree, mean_frac = _ratio_stats([f for _, f in usable], cfg.eps_ratio)
        if not agree or not _outside_half_band(mean_frac, cfg.delta_half):
            continue
        r = mean_frac if cfg.ratio_source == "mean" else usable[0][1]
        corrected = r * prev.p_dynamic + (1.0 - r) * nxt.p_dynamic
        out[i] = replace(v, p_dynamic=corrected)
        annotations.append(
            Annotation(
                ref=v.ref,
                kind=KIND_BLENDED,
                original_power=v.p_dynamic,
                corrected_power=corrected,
            )
        )
    return out, annotations


def remove_power_outliers(
    vectors: Sequence[NormalizedVector],
    groups: Sequence[VectorGroup],
    normals: set[tuple[str, int]],
    cfg: NoiseConfig,
) -> tuple[set[tuple[str, int]], list[Annotation]]:
    """Refs to drop: members whose power strays from their group's normals.

    ``groups`` must be counters-only groups over exactly ``vectors``. The
    reference level is the median power of the group's normal members;
    groups without a normal member are left alone, and normal vectors are
    never removed.
    """
    by_ref = {v.ref: v for v in vectors}
    removed: set[tuple[str, int]] = set()
    annotations: list[Annotation] = []
    for group in groups:
        normal_powers = [by_ref[ref].p_dynamic for ref in group.members if ref in normals]
        if not normal_powers:
            continue
        med = float(np.median(normal_powers))
        for ref in group.members:
            if ref in normals:
                continue
            p = by_ref[ref].p_dynamic
            if power_ratio_ok(p, med, cfg.outlier_bounds.a_v):
                continue
            removed.add(ref)
            annotations.append(
                Annotation(ref=ref, kind=KIND_OUTLIER, original_power=p, corrected_power=None)
            )
    return removed, annotations


def _applies(tv: TraceVectors, cfg: NoiseConfig) -> bool:
    if cfg.boundary_correction == "all":
        return True
    if cfg.boundary_correction == "none":
        return False
    return tv.meter_kind is MeterKind.POWER_SENSOR


def filter_dataset(
    dataset: NormalizedDataset, cfg: NoiseConfig | None = None
) -> tuple[NormalizedDataset, FilterReport]:
    """Run the whole filter; returns the surviving dataset and a report.

    Corrections feed the outlier pass: re-clustering runs on corrected
    vectors, and corrected powers are what the outlier band sees.
    """
    cfg = cfg or NoiseConfig()
    flat = dataset.all_vectors()
    groups = cluster_vectors(flat, cfg.bounds, include_power=True)
    normals = identify_normal(groups, cfg)

    def correct_trace(tv: TraceVectors) -> tuple[list[NormalizedVector], list[Annotation]]:
        if not _applies(tv, cfg):
            return list(tv.vectors), []
        vecs, ann_h = correct_halved_readings(tv.vectors, normals, cfg)
        corrected_refs = {a.ref for a in ann_h}
        vecs, ann_b = correct_blended_readings(vecs, normals, cfg, corrected_refs)
        return vecs, ann_h + ann_b

    per_trace = thread_map(correct_trace, dataset.traces)
    annotations: list[Annotation] = []
    corrected_traces: list[list[NormalizedVector]] = []
    for vecs, anns in per_trace:
        corrected_traces.append(vecs)
        annotations.extend(anns)

    flat_corrected = [v for vecs in corrected_traces for v in vecs]
    counter_groups = cluster_counters_only(flat_corrected, cfg.bounds)
    removed, removal_annotations = remove_power_outliers(
        flat_corrected, counter_groups, normals, cfg
    )
    annotations.extend(removal_annotations)

    out_traces = []
    for tv, vecs in zip(dataset.traces, corrected_traces):
        out_traces.append(
            TraceVectors(
                trace_id=tv.trace_id,
                meter_kind=tv.meter_kind,
                p_static=tv.p_static,
                vectors=[v for v in vecs if v.ref not in removed],
                n_rejected=tv.n_rejected,
            )
        )
    filtered = NormalizedDataset(schema=dataset.schema, params=dataset.params, traces=out_traces)
    report = FilterReport(
        n_input=len(flat),
        n_normal=len(normals),
        n_corrected_halved=sum(1 for a in annotations if a.kind == KIND_HALVED),
        n_corrected_blended=sum(1 for a in annotations if a.kind == KIND_BLENDED),
        n_removed_outliers=len(removed),
        annotations=annotations,
        config=cfg,
        trace_ids=[tv.trace_id for tv in dataset.traces],
    )
    return filtered, report
