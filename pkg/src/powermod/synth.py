"""Seeded synthetic trace generator with known ground truth.

Traces walk through program phases, each a distinct mean counter-rate
profile. Within a phase the activity wobbles through a common utilization
random walk plus tiny per-counter noise, so consecutive samples stay
ratio-similar (runs exist) while different traces sit at distinct levels.
Some phase transitions emit short clean "ramp" samples at intermediate
activity; these are genuine rare states, which keeps the unknown-vector
side of the evaluation protocol populated.

True dynamic power is a fixed linear function of a designated relevant
counter subset, optionally plus a bounded quadratic cross-term. Noise is
injected with exact bookkeeping:

* halved readings: a sample is replaced by activity that stops at fraction
  phi of the interval; counters scale by phi of the previous sample while
  the boundary meter readings average to half the active power.
* blended readings: the first sample after a (sharp) phase switch blends the
  two neighbouring activity levels at fraction rho while the meter average
  reports the plain midpoint.
* power outliers: the measured power alone is scaled far out of band.

Fractions phi/rho are drawn away from 0.5 (a 0.5 split is indistinguishable
from a correct reading by construction). Recorded ground-truth powers go
through the same floating-point steps as trace derivation, so on a
noise-free spec the derived vectors reproduce the truth bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CounterSchema, Dataset, MeterKind
from .errors import ConfigError, LineageError
from .ingest import RawSample, Trace, build_dataset
from .noisefilter import KIND_BLENDED, KIND_HALVED, KIND_OUTLIER, FilterReport
from .util import rng_for

LABEL_NONE = "none"


@dataclass(frozen=True)
class PhaseSpec:
    rates: tuple[float, ...]  # mean events/s per counter
    duration: int  # samples

    def __post_init__(self):
        if self.duration < 4:
            raise ConfigError("phase duration must be >= 4 samples")
        if any(r < 0 for r in self.rates):
            raise ConfigError("phase rates must be non-negative")


@dataclass(frozen=True)
class SynthSpec:
    schema: CounterSchema
    phases: tuple[PhaseSpec, ...]
    n_traces: int
    linear_coeffs: tuple[float, ...]  # watts per (event/s); zero = irrelevant
    quad_pair: tuple[int, int] | None = None
    quad_coeff: float = 0.0
    quad_scales: tuple[float, float] | None = None
    rate_halved: float = 0.0
    rate_blended: float = 0.0
    rate_outlier: float = 0.0
    sensor_jitter: float = 0.0  # stddev watts per boundary reading
    util_walk_step: float = 0.015
    counter_noise: float = 0.01
    trace_level_spread: float = 0.06
    phase_level_jitter: float = 0.65  # per (trace, phase, counter) level scatter
    ramp_prob: float = 0.9
    ramp_samples: int = 4
    meter_kind: MeterKind = MeterKind.POWER_SENSOR
    p_static: float = 1.5
    rng_seed: int = 0

    def __post_init__(self):
        if not self.phases:
            raise ConfigError("need at least one phase")
        if self.n_traces < 1:
            raise ConfigError("need at least one trace")
        n = self.schema.n
        if len(self.linear_coeffs) != n:
            raise ConfigError("linear_coeffs length must match the schema")
        if not any(c != 0 for c in self.linear_coeffs):
            raise ConfigError("at least one counter must carry power")
        for ph in self.phases:
            if len(ph.rates) != n:
                raise ConfigError("phase rate length must match the schema")
        rates = (self.rate_halved, self.rate_blended, self.rate_outlier)
        if any(not (0.0 <= r <= 1.0) for r in rates):
            raise ConfigError("noise rates must lie in [0, 1]")
        if sum(rates) > 0.5:
            raise ConfigError("noise rates must sum to at most 0.5")
        if self.meter_kind is MeterKind.ENERGY_COUNTER and (
            self.rate_halved > 0 or self.rate_blended > 0
        ):
            raise ConfigError(
                "boundary-averaging noise (halved/blended) requires a power-sensor meter"
            )
        if self.quad_pair is not None:
            a, b = self.quad_pair
            if not (0 <= a < n and 0 <= b < n):
                raise ConfigError("quad_pair indices out of range")

    @property
    def relevant(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.linear_coeffs) if c != 0)

    def true_power(self, rates: np.ndarray) -> float:
        p = float(np.dot(self.linear_coeffs, rates))
        if self.quad_pair is not None and self.quad_coeff != 0.0:
            a, b = self.quad_pair
            sa, sb = self.quad_scales or (1.0, 1.0)
            p += self.quad_coeff * (rates[a] / sa) * (rates[b] / sb)
        return p

    def to_json_dict(self) -> dict:
        return {
            "schema": list(self.schema.names),
            "phases": [
                {"rates": [float(r) for r in ph.rates], "duration": ph.duration}
                for ph in self.phases
            ],
            "n_traces": self.n_traces,
            "linear_coeffs": [float(c) for c in self.linear_coeffs],
            "quad_pair": list(self.quad_pair) if self.quad_pair else None,
            "quad_coeff": self.quad_coeff,
            "quad_scales": list(self.quad_scales) if self.quad_scales else None,
            "rate_halved": self.rate_halved,
            "rate_blended": self.rate_blended,
            "rate_outlier": self.rate_outlier,
            "sensor_jitter": self.sensor_jitter,
            "util_walk_step": self.util_walk_step,
            "counter_noise": self.counter_noise,
            "trace_level_spread": self.trace_level_spread,
            "phase_level_jitter": self.phase_level_jitter,
            "ramp_prob": self.ramp_prob,
            "ramp_samples": self.ramp_samples,
            "meter_kind": self.meter_kind.value,
            "p_static": self.p_static,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SynthSpec":
        return cls(
            schema=CounterSchema(names=tuple(data["schema"])),
            phases=tuple(
                PhaseSpec(rates=tuple(ph["rates"]), duration=int(ph["duration"]))
                for ph in data["phases"]
            ),
            n_traces=int(data["n_traces"]),
            linear_coeffs=tuple(data["linear_coeffs"]),
            quad_pair=tuple(data["quad_pair"]) if data.get("quad_pair") else None,
            quad_coeff=float(data.get("quad_coeff", 0.0)),
            quad_scales=tuple(data["quad_scales"]) if data.get("quad_scales") else None,
            rate_halved=float(data.get("rate_halved", 0.0)),
            rate_blended=float(data.get("rate_blended", 0.0)),
            rate_outlier=float(data.get("rate_outlier", 0.0)),
            sensor_jitter=float(data.get("sensor_jitter", 0.0)),
            util_walk_step=float(data.get("util_walk_step", 0.015)),
            counter_noise=float(data.get("counter_noise", 0.01)),
            trace_level_spread=float(data.get("trace_level_spread", 0.12)),
            phase_level_jitter=float(data.get("phase_level_jitter", 0.65)),
            ramp_prob=float(data.get("ramp_prob", 0.9)),
            ramp_samples=int(data.get("ramp_samples", 4)),
            meter_kind=MeterKind(data.get("meter_kind", "power_sensor")),
            p_static=float(data.get("p_static", 1.5)),
            rng_seed=int(data.get("rng_seed", 0)),
        )


@dataclass
class GroundTruth:
    """Per-sample true dynamic power and noise labels, keyed by (trace, seq)."""

    relevant: tuple[int, ...]
    power: dict[tuple[str, int], float]
    labels: dict[tuple[str, int], str]
    linear_coeffs: tuple[float, ...]

    def n_with_label(self, label: str) -> int:
        return sum(1 for v in self.labels.values() if v == label)

    def to_json_dict(self) -> dict:
        records = [
            {
                "trace_id": tid,
                "seq": seq,
                "power": self.power[(tid, seq)],
                "label": self.labels[(tid, seq)],
            }
            for (tid, seq) in sorted(self.power)
        ]
        return {
            "relevant": list(self.relevant),
            "linear_coeffs": [float(c) for c in self.linear_coeffs],
            "samples": records,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GroundTruth":
        power = {}
        labels = {}
        for rec in data["samples"]:
            ref = (rec["trace_id"], int(rec["seq"]))
            power[ref] = float(rec["power"])
            labels[ref] = rec["label"]
        return cls(
            relevant=tuple(data["relevant"]),
            power=power,
            labels=labels,
            linear_coeffs=tuple(data["linear_coeffs"]),
        )


def _off_half_fraction(rng: np.random.Generator) -> float:
    """Uniform over [0.1, 0.42] union [0.58, 0.9]."""
    u = rng.uniform(0.1, 0.74)
    return u if u <= 0.42 else u + 0.16


def _plan_trace(spec: SynthSpec, rng: np.random.Generator):
    """Lay out the sample stream and pick injection positions."""
    n_phases = len(spec.phases)
    base_n = sum(ph.duration for ph in spec.phases)

    n_blend = min(int(round(spec.rate_blended * base_n)), max(n_phases - 1, 0))
    blend_transitions: set[int] = set()
    if n_blend > 0:
        blend_transitions = set(
            int(i) for i in rng.choice(n_phases - 1, size=n_blend, replace=False)
        )
    ramp_transitions = {
        p
        for p in range(n_phases - 1)
        if p not in blend_transitions and rng.random() < spec.ramp_prob
    }

    plan: list[tuple] = []  # ("phase", p, s) | ("ramp", p, beta)
    phase_start: dict[int, int] = {}
    for p, ph in enumerate(spec.phases):
        phase_start[p] = len(plan)
        for s in range(ph.duration):
            plan.append(("phase", p, s))
        if p in ramp_transitions:
            for r_i in range(spec.ramp_samples):
                frac = (spec.ramp_samples - r_i) / (spec.ramp_samples + 1.0)
                beta = float(np.clip(frac + 0.03 * (2.0 * rng.random() - 1.0), 0.05, 0.95))
                plan.append(("ramp", p, beta))

    blend_positions = sorted(phase_start[p + 1] for p in blend_transitions)

    eligible = [
        i
        for i, entry in enumerate(plan)
        if entry[0] == "phase" and 2 <= entry[2] <= spec.phases[entry[1]].duration - 3
    ]
    n_halved = int(round(spec.rate_halved * base_n))
    n_outlier = int(round(spec.rate_outlier * base_n))
    chosen: list[int] = []
    if eligible and (n_halved + n_outlier) > 0:
        for oi in rng.permutation(len(eligible)):
            pos = eligible[oi]
            if all(abs(pos - c) >= 3 for c in chosen):
                chosen.append(pos)
            if len(chosen) == n_halved + n_outlier:
                break
    halved_positions = sorted(chosen[:n_halved])
    outlier_positions = sorted(chosen[n_halved : n_halved + n_outlier])
    return plan, blend_positions, halved_positions, outlier_positions


def _emit_trace(spec: SynthSpec, t_index: int):
    rng = rng_for(spec.rng_seed, 100, t_index)
    tau = 1.0 + spec.trace_level_spread * (2.0 * rng.random() - 1.0)
    plan, blend_pos, halved_pos, outlier_pos = _plan_trace(spec, rng)
    n = spec.schema.n
    m = len(plan)
    # per-trace scatter of the phase profiles keeps counters from acting as
    # perfect proxies of one another across traces
    jit = spec.phase_level_jitter
    phase_rates = [
        np.array(ph.rates, dtype=np.float64)
        * (1.0 + jit * (2.0 * rng.random(n) - 1.0))
        for ph in spec.phases
    ]

    rates = np.empty((m, n), dtype=np.float64)
    true = np.empty(m, dtype=np.float64)
    u = 1.0
    for i, entry in enumerate(plan):
        u = float(np.clip(u * (1.0 + spec.util_walk_step * (2.0 * rng.random() - 1.0)),
                1.0 - 4.0 * spec.util_walk_step, 1.0 + 4.0 * spec.util_walk_step))
        noise = 1.0 + spec.counter_noise * (2.0 * rng.random(n) - 1.0)
        if entry[0] == "phase":
            base = phase_rates[entry[1]]
        else:
            _, p, beta = entry
            base = beta * phase_rates[p] + (1.0 - beta) * phase_rates[p + 1]
        rates[i] = base * (tau * u) * noise
        true[i] = spec.true_power(rates[i])

    measured = true.copy()
    labels = [LABEL_NONE] * m
    boundary: dict[int, tuple[float, float]] = {}  # pos -> (begin_dyn, end_dyn)
    for pos in blend_pos:
        rho = _off_half_fraction(rng)
        rates[pos] = rho * rates[pos - 1] + (1.0 - rho) * rates[pos + 1]
        true[pos] = rho * true[pos - 1] + (1.0 - rho) * true[pos + 1]
        measured[pos] = (true[pos - 1] + true[pos + 1]) / 2.0
        boundary[pos] = (true[pos - 1], true[pos + 1])
        labels[pos] = KIND_BLENDED
    for pos in halved_pos:
        phi = _off_half_fraction(rng)
        rates[pos] = phi * rates[pos - 1]
        active = true[pos - 1]
        true[pos] = phi * active
        measured[pos] = active / 2.0
        boundary[pos] = (active, 0.0)
        labels[pos] = KIND_HALVED
    for pos in outlier_pos:
        if rng.random() < 0.5:
            factor = rng.uniform(2.5, 4.0)
        else:
            factor = rng.uniform(0.25, 0.4)
        measured[pos] = factor * true[pos]
        labels[pos] = KIND_OUTLIER

    trace_id = f"trace{t_index:03d}"
    samples: list[RawSample] = []
    truth_power: dict[tuple[str, int], float] = {}
    truth_labels: dict[tuple[str, int], str] = {}
    cum = np.zeros(n, dtype=np.float64)
    energy = 0.0
    for i in range(m):
        end = cum + rates[i] * 1.0
        j1 = spec.sensor_jitter * rng.standard_normal()
        j2 = spec.sensor_jitter * rng.standard_normal()
        if spec.meter_kind is MeterKind.POWER_SENSOR:
            if i in boundary:
                begin_dyn, end_dyn = boundary[i]
                meter_begin = spec.p_static + begin_dyn + j1
                meter_end = spec.p_static + end_dyn + j2
            else:
                meter_begin = spec.p_static + measured[i] + j1
                meter_end = spec.p_static + measured[i] + j2
            # truth recorded through the same ops as derivation, so a
            # noise-free spec reproduces it bit-exactly
            truth_power[(trace_id, i)] = (spec.p_static + true[i]) - spec.p_static
        else:
            total = spec.p_static + measured[i] + j1
            meter_begin = energy
            meter_end = energy + total * 1.0
            truth_power[(trace_id, i)] = (
                (energy + (spec.p_static + true[i]) * 1.0) - energy
            ) / 1.0 - spec.p_static
            energy = meter_end
        truth_labels[(trace_id, i)] = labels[i]
        samples.append(
            RawSample(
                seq=i,
                t=1.0,
                counter_begin=cum.copy(),
                counter_end=end,
                meter_begin=meter_begin,
                meter_end=meter_end,
            )
        )
        cum = end
    trace = Trace(
        trace_id=trace_id,
        meter_kind=spec.meter_kind,
        p_static=spec.p_static,
        samples=samples,
    )
    return trace, truth_power, truth_labels


def generate_traces(spec: SynthSpec) -> tuple[list[Trace], GroundTruth]:
    traces = []
    power: dict[tuple[str, int], float] = {}
    labels: dict[tuple[str, int], str] = {}
    for t in range(spec.n_traces):
        trace, tp, tl = _emit_trace(spec, t)
        traces.append(trace)
        power.update(tp)
        labels.update(tl)
    truth = GroundTruth(
        relevant=spec.relevant,
        power=power,
        labels=labels,
        linear_coeffs=spec.linear_coeffs,
    )
    return traces, truth


def generate(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    traces, truth = generate_traces(spec)
    return build_dataset(traces, spec.schema), truth


def default_spec(
    seed: int = 0,
    n_counters: int = 12,
    n_phases: int = 20,
    duration: int = 12,
    n_traces: int = 6,
    rate_halved: float = 0.04,
    rate_blended: float = 0.015,
    rate_outlier: float = 0.045,
    sensor_jitter: float = 0.001,
    quad_coeff: float = 0.8,
    meter_kind: MeterKind = MeterKind.POWER_SENSOR,
) -> SynthSpec:
    """The stock scenario: 12 counters of which {0, 3, 7} drive power.

    Two low-activity phases exercise the bottom of every counter's range;
    the rest are drawn at random levels. Power is linear in the relevant
    counters plus a bounded quadratic cross-term on the first two of them.
    """
    if n_counters < 8:
        raise ConfigError("default spec wants at least 8 counters")
    rng = rng_for(seed, 7)
    names = tuple(f"c{i:02d}" for i in range(n_counters))
    scales = 10.0 ** rng.uniform(3.3, 4.7, size=n_counters)
    # active levels stay well above the low phases so min-max scaling keeps
    # within-trace counter ratios close to their raw values
    levels = rng.uniform(0.25, 1.0, size=(n_phases, n_counters))
    levels[0] *= 0.05
    if n_phases >= 4:
        levels[n_phases // 2] *= 0.05
    phases = tuple(
        PhaseSpec(rates=tuple(scales * lv), duration=duration) for lv in levels
    )
    relevant = (0, 3, 7)
    watts = (2.0, 2.0, 2.8)
    coeffs = np.zeros(n_counters)
    for idx, w in zip(relevant, watts):
        coeffs[idx] = w / scales[idx]
    return SynthSpec(
        schema=CounterSchema(names=names),
        phases=phases,
        n_traces=n_traces,
        linear_coeffs=tuple(coeffs),
        quad_pair=(relevant[0], relevant[1]) if quad_coeff else None,
        quad_coeff=quad_coeff,
        quad_scales=(float(scales[relevant[0]]), float(scales[relevant[1]])) if quad_coeff else None,
        rate_halved=rate_halved,
        rate_blended=rate_blended,
        rate_outlier=rate_outlier,
        sensor_jitter=sensor_jitter,
        meter_kind=meter_kind,
        rng_seed=seed,
    )


@dataclass
class KindScore:
    n_true: int
    n_predicted: int
    true_positives: int
    precision: float
    recall: float
    no_positives: bool
    rmse_corrected: float | None = None
    mean_rel_corrected: float | None = None


@dataclass
class FilterScore:
    kinds: dict[str, KindScore]
    false_removal_rate: float
    n_clean: int


def score_filter(report: FilterReport, truth: GroundTruth) -> FilterScore:
    """Precision/recall of the filter against injection labels.

    No predicted positives score precision 1.0 with the ``no_positives``
    flag set (and symmetrically for recall with no true positives). For the
    corrected kinds the corrected-power error against the truth is reported
    as RMSE and mean relative error.
    """
    if report.n_input != len(truth.power):
        raise LineageError(
            f"report covers {report.n_input} vectors, truth has {len(truth.power)}"
        )
    for ann in report.annotations:
        if ann.ref not in truth.labels:
            raise LineageError(f"annotation ref {ann.ref} unknown to the ground truth")

    kinds: dict[str, KindScore] = {}
    for kind in (KIND_HALVED, KIND_BLENDED, KIND_OUTLIER):
        predicted = report.refs_of(kind)
        actual = {ref for ref, lab in truth.labels.items() if lab == kind}
        tp_refs = predicted & actual
        tp = len(tp_refs)
        no_pos = len(predicted) == 0
        precision = 1.0 if no_pos else tp / len(predicted)
        recall = 1.0 if not actual else tp / len(actual)
        rmse = None
        mean_rel = None
        if kind in (KIND_HALVED, KIND_BLENDED) and tp_refs:
            corrected = {a.ref: a.corrected_power for a in report.annotations if a.kind == kind}
            errs = np.array([corrected[ref] - truth.power[ref] for ref in sorted(tp_refs)])
            rels = np.array(
                [
                    abs(corrected[ref] - truth.power[ref]) / abs(truth.power[ref])
                    for ref in sorted(tp_refs)
                    if truth.power[ref] != 0
                ]
            )
            rmse = float(np.sqrt(np.mean(errs**2)))
            mean_rel = float(rels.mean()) if rels.size else None
        kinds[kind] = KindScore(
            n_true=len(actual),
            n_predicted=len(predicted),
            true_positives=tp,
            precision=precision,
            recall=recall,
            no_positives=no_pos,
            rmse_corrected=rmse,
            mean_rel_corrected=mean_rel,
        )
    clean = {ref for ref, lab in truth.labels.items() if lab == LABEL_NONE}
    false_removals = report.refs_of(KIND_OUTLIER) - {
        ref for ref, lab in truth.labels.items() if lab == KIND_OUTLIER
    }
    false_rate = len(false_removals & clean) / len(clean) if clean else 0.0
    return FilterScore(kinds=kinds, false_removal_rate=false_rate, n_clean=len(clean))
