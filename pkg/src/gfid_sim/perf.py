"""Closed-form cycle, memory-access and efficiency model.

Two cost profiles are provided:

``cycle-law``
    The cycle law with the weight-passing term, matching the cycle-accurate
    engine exactly on divisible geometries. Output write-back overlaps
    compute at one word per cycle and only costs when it is the longer of
    the two.
``calibrated``
    Calibrated to the published per-layer breakdown: the weight-passing
    term is left out and write-back is charged serially at four words per
    cycle. This is the profile used for reproducing reported numbers.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .engine_config import EngineConfig
from .gfid import TileModeConfig
from .layers import ConvLayerConfig, FcLayerConfig, NetworkDescriptor


@dataclass(frozen=True)
class CostModel:
    name: str
    weight_passing: bool = True
    writeback: str = "overlap"  # "overlap" or "serial"
    write_words_per_cycle: int = 1

    def __post_init__(self):
        if self.writeback not in ("overlap", "serial"):
            raise ValueError(f"writeback must be 'overlap' or 'serial', not {self.writeback!r}")
        if self.write_words_per_cycle < 1:
            raise ValueError("write_words_per_cycle must be >= 1")


CYCLE_LAW = CostModel("cycle-law", weight_passing=True, writeback="overlap", write_words_per_cycle=1)
CALIBRATED = CostModel("calibrated", weight_passing=False, writeback="serial", write_words_per_cycle=4)
PROFILES = {m.name: m for m in (CYCLE_LAW, CALIBRATED)}


def _mode(cfg: ConvLayerConfig, mode: TileModeConfig | None, engine: EngineConfig | None):
    if mode is None:
        mode = (engine or EngineConfig()).mode(cfg.w_f, cfg.s)
    elif (mode.w_f, mode.s) != (cfg.w_f, cfg.s):
        raise ValueError(f"mode ({mode.w_f},{mode.s}) does not match layer ({cfg.w_f},{cfg.s})")
    return mode


def segment_length(cfg: ConvLayerConfig, mode: TileModeConfig) -> int:
    """Outputs per segment: N_eff, or the whole map when it is smaller."""
    return min(mode.n_eff, cfg.h_out * cfg.w_out)


def conv_cycles_exact(cfg: ConvLayerConfig, mode: TileModeConfig | None = None,
                      weight_passing: bool = True, engine: EngineConfig | None = None) -> Fraction:
    mode = _mode(cfg, mode, engine)
    n = segment_length(cfg, mode)
    hw = cfg.h_out * cfg.w_out
    passes = cfg.h_f * cfg.c_in_per_group * math.ceil(cfg.c_out_per_group / mode.p_eff)
    cycles = Fraction(hw, n) * (cfg.s * n + cfg.w_f - cfg.s) * passes
    if weight_passing:
        cycles += (cfg.w_f - 1) * (cfg.h_out - 1) * passes
    return cycles * cfg.groups


def conv_cycles(cfg: ConvLayerConfig, mode: TileModeConfig | None = None,
                weight_passing: bool = True, engine: EngineConfig | None = None) -> int:
    return math.ceil(conv_cycles_exact(cfg, mode, weight_passing, engine))


def conv_mem_accesses(cfg: ConvLayerConfig, mode: TileModeConfig | None = None,
                      weight_passing: bool = True,
                      engine: EngineConfig | None = None) -> tuple[int, int, int]:
    """(ma_inputs, ma_filters, ma_outputs) in 16-bit words.

    Outputs are written once per pixel of every output map.
    """
    mode = _mode(cfg, mode, engine)
    hw = cfg.h_out * cfg.w_out
    ma_inputs = conv_cycles(cfg, mode, weight_passing)
    ma_filters = cfg.h_f * cfg.w_f * cfg.c_in_per_group * math.ceil(hw / segment_length(cfg, mode)) * cfg.c_out
    return ma_inputs, ma_filters, hw * cfg.c_out


def writeback_cycles(cfg: ConvLayerConfig, cost: CostModel = CYCLE_LAW) -> int:
    return math.ceil(cfg.h_out * cfg.w_out * cfg.c_out / cost.write_words_per_cycle)


def writeback_stall(cfg: ConvLayerConfig, compute_cycles: int, cost: CostModel = CYCLE_LAW) -> int:
    """Extra cycles spent writing outputs on top of ``compute_cycles``."""
    write = writeback_cycles(cfg, cost)
    if cost.writeback == "serial":
        return write
    return max(0, write - compute_cycles)


def fc_cycles(cfg: FcLayerConfig, engine: EngineConfig | None = None) -> int:
    p = (engine or EngineConfig()).total_pes
    return math.ceil(cfg.m / p) * cfg.n


def fc_mem_accesses(cfg: FcLayerConfig, engine: EngineConfig | None = None) -> tuple[int, int, int]:
    """(ma_inputs, ma_weights, ma_outputs) in 16-bit words."""
    return fc_cycles(cfg, engine), cfg.m * cfg.n, cfg.m


def peak_performance(engine: EngineConfig | None = None, clock: str | float = "conv") -> float:
    """2 ops per PE per cycle, in Gops."""
    engine = engine or EngineConfig()
    if clock == "conv":
        hz = engine.conv_clock_hz
    elif clock == "fc":
        hz = engine.fc_clock_hz
    else:
        hz = float(clock)
    return 2 * engine.total_pes * hz / 1e9


def efficiency_of(ops: int, cycles: int, engine: EngineConfig | None = None) -> float:
    if cycles <= 0:
        raise ValueError("cycles must be positive")
    return ops / (2 * (engine or EngineConfig()).total_pes * cycles)


def words_to_mb(words: int) -> float:
    return words * 2 / 1e6


@dataclass
class LayerPerf:
    index: int  # 1-based position in the network
    kind: str
    mode: str
    compute_cycles: int
    stall_cycles: int
    clock_hz: float
    ma_inputs: int
    ma_weights: int
    ma_outputs: int
    ops: int
    total_pes: int

    @property
    def cycles(self) -> int:
        return self.compute_cycles + self.stall_cycles

    @property
    def latency_s(self) -> float:
        return self.cycles / self.clock_hz

    @property
    def ma_words(self) -> int:
        return self.ma_inputs + self.ma_weights + self.ma_outputs

    @property
    def ma_mb(self) -> float:
        return words_to_mb(self.ma_words)

    @property
    def peak_gops(self) -> float:
        return 2 * self.total_pes * self.clock_hz / 1e9

    @property
    def performance_gops(self) -> float:
        return self.ops / self.latency_s / 1e9

    @property
    def efficiency(self) -> float:
        return self.ops / (2 * self.total_pes * self.cycles)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(cycles=self.cycles, latency_ms=self.latency_s * 1e3, ma_mb=self.ma_mb,
                 performance_gops=self.performance_gops, efficiency_pct=100 * self.efficiency)
        return d


@dataclass
class PerfSummary:
    kind: str
    layers: list = field(default_factory=list)

    @property
    def cycles(self) -> int:
        return sum(l.cycles for l in self.layers)

    @property
    def latency_s(self) -> float:
        return sum(l.latency_s for l in self.layers)

    @property
    def throughput_fps(self) -> float:
        return 1.0 / self.latency_s if self.layers else 0.0

    @property
    def ops(self) -> int:
        return sum(l.ops for l in self.layers)

    @property
    def ma_inputs(self) -> int:
        return sum(l.ma_inputs for l in self.layers)

    @property
    def ma_weights(self) -> int:
        return sum(l.ma_weights for l in self.layers)

    @property
    def ma_outputs(self) -> int:
        return sum(l.ma_outputs for l in self.layers)

    @property
    def ma_mb(self) -> float:
        return words_to_mb(self.ma_inputs + self.ma_weights + self.ma_outputs)

    @property
    def performance_gops(self) -> float:
        return self.ops / self.latency_s / 1e9 if self.layers else 0.0

    @property
    def efficiency(self) -> float:
        """Achieved over peak performance, cycles weighted by clock domain."""
        if not self.layers:
            return 0.0
        peak_time = sum(2 * l.total_pes * l.clock_hz * l.latency_s for l in self.layers)
        return self.ops / peak_time

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "layers": len(self.layers), "cycles": self.cycles,
            "latency_ms": self.latency_s * 1e3, "throughput_fps": self.throughput_fps,
            "ops": self.ops, "performance_gops": self.performance_gops,
            "efficiency_pct": 100 * self.efficiency, "ma_inputs": self.ma_inputs,
            "ma_weights": self.ma_weights, "ma_outputs": self.ma_outputs, "ma_mb": self.ma_mb,
        }


@dataclass
class PerfReport:
    network: str
    model: str
    layers: list
    peak_gops_conv: float
    peak_gops_fc: float

    def summary(self, kind: str | None = None) -> PerfSummary:
        return PerfSummary(kind or "all", [l for l in self.layers if kind in (None, l.kind)])

    @property
    def conv(self) -> PerfSummary:
        return self.summary("conv")

    @property
    def fc(self) -> PerfSummary:
        return self.summary("fc")

    @property
    def total(self) -> PerfSummary:
        return self.summary()

    def select(self, indices) -> "PerfReport":
        keep = set(indices)
        return PerfReport(self.network, self.model, [l for l in self.layers if l.index in keep],
                          self.peak_gops_conv, self.peak_gops_fc)

    def to_dict(self) -> dict:
        return {
            "network": self.network, "model": self.model,
            "peak_gops": {"conv": self.peak_gops_conv, "fc": self.peak_gops_fc},
            "layers": [l.to_dict() for l in self.layers],
            "totals": {k: self.summary(None if k == "all" else k).to_dict()
                       for k in ("conv", "fc", "all")},
        }


def conv_layer_perf(cfg: ConvLayerConfig, index: int = 1, engine: EngineConfig | None = None,
                    cost: CostModel = CALIBRATED) -> LayerPerf:
    engine = engine or EngineConfig()
    mode = engine.mode(cfg.w_f, cfg.s)
    compute = conv_cycles(cfg, mode, cost.weight_passing)
    ma_in, ma_w, ma_out = conv_mem_accesses(cfg, mode, cost.weight_passing)
    return LayerPerf(index, "conv", f"{cfg.h_f}x{cfg.w_f}/s{cfg.s}", compute,
                     writeback_stall(cfg, compute, cost), engine.conv_clock_hz,
                     ma_in, ma_w, ma_out, cfg.ops, engine.total_pes)


def fc_layer_perf(cfg: FcLayerConfig, index: int = 1,
                  engine: EngineConfig | None = None) -> LayerPerf:
    engine = engine or EngineConfig()
    ma_in, ma_w, ma_out = fc_mem_accesses(cfg, engine)
    return LayerPerf(index, "fc", "fc", fc_cycles(cfg, engine), 0, engine.fc_clock_hz,
                     ma_in, ma_w, ma_out, cfg.ops, engine.total_pes)


def network_report(net: NetworkDescriptor, engine: EngineConfig | None = None,
                   cost: CostModel | str = CALIBRATED) -> PerfReport:
    engine = engine or EngineConfig()
    if isinstance(cost, str):
        cost = PROFILES[cost]
    layers = [
        conv_layer_perf(l, i, engine, cost) if l.kind == "conv" else fc_layer_perf(l, i, engine)
        for i, l in enumerate(net.layers, start=1)
    ]
    return PerfReport(net.name, cost.name, layers,
                      peak_performance(engine, "conv"), peak_performance(engine, "fc"))


def efficiency(report) -> float:
    """Efficiency of a LayerPerf, PerfSummary or PerfReport (whole network)."""
    if isinstance(report, PerfReport):
        report = report.total
    return report.efficiency


CSV_FIELDS = ["layer", "kind", "cycles", "latency_ms", "ma_mb", "efficiency_pct"]
COMPARE_FIELDS = ["ref_latency_ms", "delta_latency_ms", "ref_ma_mb", "delta_ma_mb",
                  "ref_efficiency_pct", "delta_efficiency_pct"]


def _delta(value, ref):
    return "" if ref is None else f"{value - ref:.4f}"


def _ref(ref):
    return "" if ref is None else f"{ref:g}"


def report_rows(report: PerfReport, reference=None) -> list[dict]:
    """Per-layer rows; ``reference`` maps layer index to a LayerReference,
    or is a sequence of LayerReference."""
    if reference is not None and not isinstance(reference, dict):
        reference = {r.layer: r for r in reference}
    rows = []
    for l in report.layers:
        row = {"layer": l.index, "kind": l.kind, "cycles": l.cycles,
               "latency_ms": f"{l.latency_s * 1e3:.4f}", "ma_mb": f"{l.ma_mb:.4f}",
               "efficiency_pct": f"{100 * l.efficiency:.2f}"}
        if reference is not None:
            ref = reference.get(l.index)
            lat, mb, eff = ((ref.latency_ms, ref.memory_mb, ref.efficiency_pct)
                            if ref else (None, None, None))
            row.update(ref_latency_ms=_ref(lat), delta_latency_ms=_delta(l.latency_s * 1e3, lat),
                       ref_ma_mb=_ref(mb), delta_ma_mb=_delta(l.ma_mb, mb),
                       ref_efficiency_pct=_ref(eff),
                       delta_efficiency_pct=_delta(100 * l.efficiency, eff))
        rows.append(row)
    return rows


def report_to_csv(report: PerfReport, reference=None) -> str:
    buf = io.StringIO()
    fields = CSV_FIELDS + (COMPARE_FIELDS if reference is not None else [])
    out = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    out.writeheader()
    out.writerows(report_rows(report, reference))
    return buf.getvalue()


def report_to_json(report: PerfReport, extra: dict | None = None) -> str:
    d = report.to_dict()
    if extra:
        d.update(extra)
    return json.dumps(d, indent=2) + "\n"
