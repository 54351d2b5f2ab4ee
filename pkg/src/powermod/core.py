"""Domain types, min-max normalization and the ratio-band similarity predicate.

A vector pairs the dynamic power of one sampling interval with the per-second
rates of the hardware counters observed in that interval. Counter rates are
min-max scaled into [0, 1]; power is kept in watts. Two normalized vectors are
similar when, coordinate by coordinate, the ratio of their values stays inside
the band [a_v, 1/a_v].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyDatasetError, SchemaMismatchError


class MeterKind(enum.Enum):
    """How the power meter of a trace reports: instantaneous watts read at
    interval boundaries, or a cumulative joule counter."""

    POWER_SENSOR = "power_sensor"
    ENERGY_COUNTER = "energy_counter"


@dataclass(frozen=True)
class CounterSchema:
    """Ordered counter names; every vector of a dataset conforms to one schema."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if len(self.names) < 1:
            raise SchemaMismatchError("schema needs at least one counter")
        if any(not n for n in self.names):
            raise SchemaMismatchError("counter names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise SchemaMismatchError("counter names must be unique")

    @property
    def n(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaMismatchError(f"unknown counter {name!r}") from None


def _freeze(arr) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Vector:
    """One sampling interval: dynamic power in watts plus counter rates (events/s)."""

    p_dynamic: float
    counters: np.ndarray
    trace_id: str
    seq: int

    def __post_init__(self):
        object.__setattr__(self, "p_dynamic", float(self.p_dynamic))
        object.__setattr__(self, "counters", _freeze(self.counters))
        if self.p_dynamic < 0:
            raise ValueError("dynamic power must be non-negative")
        if np.any(self.counters < 0):
            raise ValueError("counter rates must be non-negative")

    @property
    def ref(self) -> tuple[str, int]:
        return (self.trace_id, self.seq)


@dataclass(frozen=True, eq=False)
class NormalizedVector:
    """Vector with min-max scaled counters in [0, 1]; power is unchanged watts."""

    p_dynamic: float
    counters: np.ndarray
    trace_id: str
    seq: int

    def __post_init__(self):
        object.__setattr__(self, "p_dynamic", float(self.p_dynamic))
        object.__setattr__(self, "counters", _freeze(self.counters))

    @property
    def ref(self) -> tuple[str, int]:
        return (self.trace_id, self.seq)


@dataclass(frozen=True)
class NormalizationParams:
    """Per-counter (min, max) in events/s, fitted over a closed vector set."""

    minima: np.ndarray
    maxima: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "minima", _freeze(self.minima))
        object.__setattr__(self, "maxima", _freeze(self.maxima))
        if self.minima.shape != self.maxima.shape or self.minima.ndim != 1:
            raise ValueError("minima and maxima must be 1-D and equal length")
        if np.any(self.maxima < self.minima):
            raise ValueError("max must be >= min for every counter")

    @property
    def n(self) -> int:
        return self.minima.shape[0]

    def spans(self) -> np.ndarray:
        return self.maxima - self.minima

    def apply(self, raw: np.ndarray) -> np.ndarray:
        """Scale raw rates into [0, 1]; a degenerate counter (max == min) maps to 0.

        Values outside the fitting range are clamped into [0, 1].
        """
        raw = np.asarray(raw, dtype=np.float64)
        spans = self.spans()
        safe = np.where(spans > 0, spans, 1.0)
        scaled = (raw - self.minima) / safe
        scaled = np.where(spans > 0, scaled, 0.0)
        return np.clip(scaled, 0.0, 1.0)

    def invert(self, normalized: np.ndarray) -> np.ndarray:
        """Map scaled values back to raw rates (degenerate counters return min)."""
        normalized = np.asarray(normalized, dtype=np.float64)
        return self.minima + normalized * self.spans()


@dataclass(frozen=True)
class SimilarityBounds:
    """Ratio band [a_v, b_v] with b_v = 1/a_v; a_v in (0, 1]."""

    a_v: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "a_v", float(self.a_v))
        if not (0.0 < self.a_v <= 1.0):
            raise ValueError("a_v must be in (0, 1]")

    @property
    def b_v(self) -> float:
        return 1.0 / self.a_v


def compute_normalization(vectors: Sequence[Vector]) -> NormalizationParams:
    """Column-wise min/max over the given vectors."""
    if not vectors:
        raise EmptyDatasetError("empty dataset")
    mat = np.stack([v.counters for v in vectors])
    return NormalizationParams(minima=mat.min(axis=0), maxima=mat.max(axis=0))


def normalize(v: Vector, params: NormalizationParams) -> NormalizedVector:
    if v.counters.shape[0] != params.n:
        raise SchemaMismatchError(
            f"vector has {v.counters.shape[0]} counters, params expect {params.n}"
        )
    return NormalizedVector(
        p_dynamic=v.p_dynamic,
        counters=params.apply(v.counters),
        trace_id=v.trace_id,
        seq=v.seq,
    )


def ratio_band_ok(u: np.ndarray, w: np.ndarray, a_v: float) -> bool:
    """True when every coordinate pair sits inside the ratio band [a_v, 1/a_v].

    Zero handling: 0/0 counts as inside the band (ratio of vanishing values),
    zero against non-zero as outside. Checking both division directions
    against a_v makes the predicate exactly symmetric, including under
    floating-point rounding.
    """
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    uz = u == 0.0
    wz = w == 0.0
    if np.any(uz != wz):
        return False
    live = ~uz
    if not live.any():
        return True
    un = u[live]
    wn = w[live]
    with np.errstate(over="ignore"):  # subnormal denominators overflow to inf
        return bool(np.all(un / wn >= a_v) and np.all(wn / un >= a_v))


def power_ratio_ok(p1: float, p2: float, a_v: float) -> bool:
    """Ratio-band test on raw watts with the same zero handling as counters."""
    if p1 == 0.0 and p2 == 0.0:
        return True
    if p1 == 0.0 or p2 == 0.0:
        return False
    return p1 / p2 >= a_v and p2 / p1 >= a_v


def is_similar(
    u: NormalizedVector,
    w: NormalizedVector,
    bounds: SimilarityBounds,
    include_power: bool = True,
) -> bool:
    """Pairwise similarity under counter ratio bands, optionally gated on power.

    Symmetric and reflexive; power is compared in raw watts because
    normalization leaves it untouched.
    """
    if u.counters.shape[0] != w.counters.shape[0]:
        raise SchemaMismatchError("vectors have different counter counts")
    if include_power and not power_ratio_ok(u.p_dynamic, w.p_dynamic, bounds.a_v):
        return False
    return ratio_band_ok(u.counters, w.counters, bounds.a_v)


@dataclass
class TraceVectors:
    """Derived vectors of one trace in seq order, plus the trace metadata."""

    trace_id: str
    meter_kind: MeterKind
    p_static: float
    vectors: list
    n_rejected: int = 0


@dataclass
class Dataset:
    """Vectors of one or more traces under a single schema.

    The flattened view preserves (trace order, seq order). Seq values are
    strictly increasing within a trace; raw ingested traces number them
    consecutively from 0, datasets that went through filtering may have gaps.
    """

    schema: CounterSchema
    traces: list[TraceVectors]

    def __post_init__(self):
        seen: set[tuple[str, int]] = set()
        for tv in self.traces:
            for v in tv.vectors:
                if v.counters.shape[0] != self.schema.n:
                    raise SchemaMismatchError(
                        f"vector {v.ref} has {v.counters.shape[0]} counters, "
                        f"schema expects {self.schema.n}"
                    )
                if v.ref in seen:
                    raise ValueError(f"duplicate vector ref {v.ref}")
                seen.add(v.ref)

    def all_vectors(self) -> list:
        return [v for tv in self.traces for v in tv.vectors]

    def __len__(self) -> int:
        return sum(len(tv.vectors) for tv in self.traces)

    def counter_matrix(self) -> np.ndarray:
        vecs = self.all_vectors()
        if not vecs:
            return np.empty((0, self.schema.n))
        return np.stack([v.counters for v in vecs])

    def power_array(self) -> np.ndarray:
        return np.array([v.p_dynamic for v in self.all_vectors()], dtype=np.float64)

    def refs(self) -> list[tuple[str, int]]:
        return [v.ref for v in self.all_vectors()]


@dataclass
class NormalizedDataset:
    """Dataset after min-max scaling, together with the parameters used."""

    schema: CounterSchema
    params: NormalizationParams
    traces: list[TraceVectors]

    def all_vectors(self) -> list:
        return [v for tv in self.traces for v in tv.vectors]

    def __len__(self) -> int:
        return sum(len(tv.vectors) for tv in self.traces)

    def counter_matrix(self) -> np.ndarray:
        vecs = self.all_vectors()
        if not vecs:
            return np.empty((0, self.schema.n))
        return np.stack([v.counters for v in vecs])

    def power_array(self) -> np.ndarray:
        return np.array([v.p_dynamic for v in self.all_vectors()], dtype=np.float64)

    def refs(self) -> list[tuple[str, int]]:
        return [v.ref for v in self.all_vectors()]


def normalize_dataset(dataset: Dataset) -> NormalizedDataset:
    """Fit normalization over the whole dataset and scale every vector."""
    vectors = dataset.all_vectors()
    params = compute_normalization(vectors)
    traces = []
    for tv in dataset.traces:
        traces.append(
            TraceVectors(
                trace_id=tv.trace_id,
                meter_kind=tv.meter_kind,
                p_static=tv.p_static,
                vectors=[normalize(v, params) for v in tv.vectors],
                n_rejected=tv.n_rejected,
            )
        )
    return NormalizedDataset(schema=dataset.schema, params=params, traces=traces)


def project_dataset(dataset: Dataset, names: Sequence[str]) -> Dataset:
    """Restrict a dataset to a subset of counters, keeping schema order."""
    indices = sorted(dataset.schema.index_of(n) for n in names)
    sub_names = tuple(dataset.schema.names[i] for i in indices)
    schema = CounterSchema(names=sub_names)
    idx = np.array(indices, dtype=np.intp)
    traces = []
    for tv in dataset.traces:
        traces.append(
            TraceVectors(
                trace_id=tv.trace_id,
                meter_kind=tv.meter_kind,
                p_static=tv.p_static,
                vectors=[
                    Vector(
                        p_dynamic=v.p_dynamic,
                        counters=v.counters[idx],
                        trace_id=v.trace_id,
                        seq=v.seq,
                    )
                    for v in tv.vectors
                ],
                n_rejected=tv.n_rejected,
            )
        )
    return Dataset(schema=schema, traces=traces)
