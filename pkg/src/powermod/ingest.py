"""Trace files and start/stop rate derivation.

A trace is a CSV of raw interval readings plus a JSON sidecar with the trace
metadata. Counter rates come from differencing the cumulative begin/end
readings over the interval length; measured power comes from averaging the
two boundary watt readings (power-sensor traces) or differencing the joule
counter (energy-counter traces). Dynamic power is measured power minus the
configured idle-power calibration value, clamped at zero.

CSV layout (header required)::

    seq,t_seconds,<name>_begin,<name>_end,...,meter_begin,meter_end

Sidecar ``<stem>.json``::

    {"trace_id": str, "meter_kind": "power_sensor"|"energy_counter",
     "p_static_watts": number, "schema": [counter names]}

Counter wrap handling: a decreasing cumulative reading cannot be repaired
without guessing, so the affected sample is rejected at derivation time and
counted on the resulting dataset instead of silently patched.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import CounterSchema, Dataset, MeterKind, TraceVectors, Vector
from .errors import (
    CounterWrapError,
    EmptyDatasetError,
    InvalidIntervalError,
    SchemaMismatchError,
    TraceFormatError,
)
from .util import thread_map


@dataclass(frozen=True)
class RawSample:
    """One interval's raw readings before any derivation."""

    seq: int
    t: float
    counter_begin: np.ndarray
    counter_end: np.ndarray
    meter_begin: float
    meter_end: float

    def __post_init__(self):
        object.__setattr__(
            self, "counter_begin", np.ascontiguousarray(self.counter_begin, dtype=np.float64)
        )
        object.__setattr__(
            self, "counter_end", np.ascontiguousarray(self.counter_end, dtype=np.float64)
        )


@dataclass
class Trace:
    """Time-ordered raw samples from one run."""

    trace_id: str
    meter_kind: MeterKind
    p_static: float
    samples: list[RawSample]

    def __post_init__(self):
        if self.p_static < 0:
            raise ValueError("p_static must be non-negative")


def derive_vector(
    sample: RawSample,
    kind: MeterKind,
    p_static: float,
    seq: int,
    trace_id: str,
) -> Vector:
    """Turn raw boundary readings into (dynamic power, counter rates)."""
    if sample.t <= 0:
        raise InvalidIntervalError(f"invalid interval t={sample.t} in {trace_id} seq {seq}")
    deltas = sample.counter_end - sample.counter_begin
    if np.any(deltas < 0):
        bad = int(np.argmax(deltas < 0))
        raise CounterWrapError(
            f"counter wrap at {trace_id} seq {seq}: column {bad} decreased"
        )
    rates = deltas / sample.t
    if kind is MeterKind.POWER_SENSOR:
        power = (sample.meter_begin + sample.meter_end) / 2.0
    else:
        if sample.meter_end < sample.meter_begin:
            raise CounterWrapError(
                f"counter wrap at {trace_id} seq {seq}: energy reading decreased"
            )
        power = (sample.meter_end - sample.meter_begin) / sample.t
    p_dynamic = power - p_static
    if p_dynamic < 0.0:
        p_dynamic = 0.0
    return Vector(p_dynamic=p_dynamic, counters=rates, trace_id=trace_id, seq=seq)


def derive_trace(trace: Trace) -> TraceVectors:
    """Derive all samples of a trace; wrap-rejected samples are counted."""
    vectors = []
    rejected = 0
    for sample in trace.samples:
        try:
            vectors.append(
                derive_vector(sample, trace.meter_kind, trace.p_static, sample.seq, trace.trace_id)
            )
        except CounterWrapError:
            rejected += 1
    return TraceVectors(
        trace_id=trace.trace_id,
        meter_kind=trace.meter_kind,
        p_static=trace.p_static,
        vectors=vectors,
        n_rejected=rejected,
    )


def build_dataset(traces: Sequence[Trace], schema: CounterSchema) -> Dataset:
    derived = thread_map(derive_trace, list(traces))
    return Dataset(schema=schema, traces=list(derived))


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def _read_sidecar(csv_path: Path) -> tuple[str, MeterKind, float, CounterSchema]:
    meta_path = _sidecar_path(csv_path)
    if not meta_path.exists():
        raise TraceFormatError(csv_path, 0, f"missing sidecar {meta_path.name}")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    try:
        trace_id = str(meta["trace_id"])
        kind = MeterKind(meta["meter_kind"])
        p_static = float(meta["p_static_watts"])
        schema = CounterSchema(names=tuple(meta["schema"]))
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(meta_path, 0, f"bad sidecar: {exc}") from exc
    return trace_id, kind, p_static, schema


def expected_header(schema: CounterSchema) -> list[str]:
    cols = ["seq", "t_seconds"]
    for name in schema.names:
        cols.append(f"{name}_begin")
        cols.append(f"{name}_end")
    cols.extend(["meter_begin", "meter_end"])
    return cols


def load_trace(path: str | Path, schema: CounterSchema | None = None) -> Trace:
    """Parse one trace CSV (+ sidecar). Errors cite the offending line."""
    path = Path(path)
    trace_id, kind, p_static, file_schema = _read_sidecar(path)
    if schema is not None and schema.names != file_schema.names:
        raise SchemaMismatchError(
            f"{path}: sidecar schema {list(file_schema.names)} does not match "
            f"expected {list(schema.names)}"
        )
    schema = file_schema
    want = expected_header(schema)

    samples: list[RawSample] = []
    last_seq = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError(path, 1, "empty trace") from None
        if [h.strip() for h in header] != want:
            raise SchemaMismatchError(
                f"{path}: header {header} does not match expected schema "
                f"columns {want}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(want):
                raise TraceFormatError(
                    path, lineno, f"expected {len(want)} columns, got {len(row)}"
                )
            try:
                seq = int(row[0])
                values = [float(x) for x in row[1:]]
            except ValueError as exc:
                raise TraceFormatError(path, lineno, f"non-numeric field: {exc}") from exc
            t = values[0]
            if t <= 0:
                raise TraceFormatError(path, lineno, f"invalid interval t={t}")
            if last_seq is not None and seq <= last_seq:
                raise TraceFormatError(path, lineno, f"seq {seq} not increasing")
            last_seq = seq
            pairs = values[1 : 1 + 2 * schema.n]
            samples.append(
                RawSample(
                    seq=seq,
                    t=t,
                    counter_begin=np.array(pairs[0::2]),
                    counter_end=np.array(pairs[1::2]),
                    meter_begin=values[-2],
                    meter_end=values[-1],
                )
            )
    if not samples:
        raise TraceFormatError(path, 1, "empty trace")
    return Trace(trace_id=trace_id, meter_kind=kind, p_static=p_static, samples=samples)


def load_dataset(paths: Sequence[str | Path] | str | Path, schema: CounterSchema | None = None) -> Dataset:
    """Load traces from explicit paths or every ``*.csv`` in a directory."""
    if isinstance(paths, (str, Path)) and Path(paths).is_dir():
        csv_paths = sorted(Path(paths).glob("*.csv"))
    elif isinstance(paths, (str, Path)):
        csv_paths = [Path(paths)]
    else:
        csv_paths = [Path(p) for p in paths]
    if not csv_paths:
        raise EmptyDatasetError("no trace files found")
    traces = thread_map(lambda p: load_trace(p, schema), csv_paths)
    schemas = {t.trace_id: None for t in traces}
    if len(schemas) != len(traces):
        raise TraceFormatError(csv_paths[0], 0, "duplicate trace_id across files")
    first_schema = _read_sidecar(csv_paths[0])[3]
    for p in csv_paths[1:]:
        other = _read_sidecar(p)[3]
        if other.names != first_schema.names:
            raise SchemaMismatchError(
                f"{p}: schema {list(other.names)} differs from {list(first_schema.names)}"
            )
    return build_dataset(traces, schema or first_schema)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_trace(trace: Trace, out_dir: str | Path, schema: CounterSchema, stem: str | None = None) -> Path:
    """Write a trace as CSV + sidecar; numeric payload round-trips exactly."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or trace.trace_id
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(expected_header(schema))
        for s in trace.samples:
            row = [str(s.seq), _fmt(s.t)]
            for k in range(schema.n):
                row.append(_fmt(s.counter_begin[k]))
                row.append(_fmt(s.counter_end[k]))
            row.append(_fmt(s.meter_begin))
            row.append(_fmt(s.meter_end))
            writer.writerow(row)
    meta = {
        "trace_id": trace.trace_id,
        "meter_kind": trace.meter_kind.value,
        "p_static_watts": trace.p_static,
        "schema": list(schema.names),
    }
    with open(_sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def export_vectors_as_trace(tv: TraceVectors, out_dir: str | Path, schema: CounterSchema) -> Path:
    """Re-emit derived vectors in trace form (t=1 s, flat meter readings).

    Used to persist filtered datasets: counters are written as one-second
    deltas and power as equal begin/end readings, so re-deriving recovers
    the vectors to floating-point rounding.
    """
    samples = []
    for v in tv.vectors:
        total = tv.p_static + v.p_dynamic
        if tv.meter_kind is MeterKind.POWER_SENSOR:
            meter_begin = meter_end = total
        else:
            meter_begin = 0.0
            meter_end = total  # joules over t = 1 s
        samples.append(
            RawSample(
                seq=v.seq,
                t=1.0,
                counter_begin=np.zeros(schema.n),
                counter_end=v.counters * 1.0,
                meter_begin=meter_begin,
                meter_end=meter_end,
            )
        )
    trace = Trace(
        trace_id=tv.trace_id, meter_kind=tv.meter_kind, p_static=tv.p_static, samples=samples
    )
    return save_trace(trace, out_dir, schema)


def export_dataset(dataset: Dataset, out_dir: str | Path) -> list[Path]:
    return [export_vectors_as_trace(tv, out_dir, dataset.schema) for tv in dataset.traces]
