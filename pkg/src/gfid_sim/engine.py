"""The full engine: parallel tiles scheduled over a whole layer.

Conv schedule, outermost first: group, output-channel pass (up to p_eff
logical tiles, one output map each), segment (up to N_eff consecutive
outputs in raster order), input channel k, filter row j, and the row
pieces of the segment. A segment that spans several output rows is cut
into one piece per row. Every output-row boundary costs a weight-passing
shift of w_f - 1 cycles. Inside a segment, w_f - s of those cycles are
spent streaming the next row's lead-in pixels, so only s - 1 are idle.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine_config import EngineConfig
from .errors import ShapeError
from .fixedpoint import requantize_relu
from .gfid import TileModeConfig
from .layers import (ConvLayerConfig, FcLayerConfig, FilterBank, NetworkDescriptor, Tensor3,
                     check_input)
from .perf import CYCLE_LAW, CostModel, words_to_mb, writeback_stall
from .tile import FcTile, Tile

__all__ = [
    "EngineConfig", "SimResult", "NetworkResult", "PipelinePlan", "run_conv_layer",
    "run_fc_layer", "run_network", "plan_pipeline", "default_workers",
]


@dataclass
class SimResult:
    kind: str
    output: object  # Tensor3 for conv, int16 vector for fc
    cycles: int
    ma_inputs: int
    ma_weights: int
    ma_outputs: int
    busy_pe_cycles: int
    saturations: int
    total_pes: int
    stall_cycles: int = 0
    layer: int = 1

    @property
    def busy_ratio(self) -> float:
        return self.busy_pe_cycles / (self.total_pes * self.cycles) if self.cycles else 0.0

    def to_record(self) -> dict:
        return {"layer": self.layer, "kind": self.kind, "cycles": self.cycles,
                "ma_inputs": self.ma_inputs, "ma_weights": self.ma_weights,
                "ma_outputs": self.ma_outputs, "busy_ratio": round(self.busy_ratio, 6),
                "saturations": self.saturations}


def _segments(hw: int, n: int):
    return [(start, min(n, hw - start)) for start in range(0, hw, n)]


def _pieces(start: int, n: int, w_out: int):
    """Split outputs start..start+n-1 by output row: (row, col, count, offset)."""
    out, g = [], 0
    while g < n:
        z, t = divmod(start + g, w_out)
        count = min(n - g, w_out - t)
        out.append((z, t, count, g))
        g += count
    return out


def run_conv_layer(cfg: ConvLayerConfig, x: Tensor3, w: FilterBank,
                   engine: EngineConfig | None = None, layer: int = 1) -> SimResult:
    """Cycle-accurate convolution on raw fixed-point tensors."""
    engine = engine or EngineConfig()
    mode: TileModeConfig = engine.mode(cfg.w_f, cfg.s)
    check_input(x, cfg)
    w.check(cfg)
    xs = np.asarray(x.data, dtype=np.int64)
    filters = np.asarray(w.filters, dtype=np.int64)
    bias = np.asarray(w.biases, dtype=np.int64)
    hw = cfg.h_out * cfg.w_out
    n_seg = min(mode.n_eff, hw)
    segments = [(start, n, _pieces(start, n, cfg.w_out)) for start, n in _segments(hw, n_seg)]
    out = np.zeros((cfg.c_out, hw), dtype=np.int16)
    s, w_f = cfg.s, cfg.w_f
    ci_g, co_g = cfg.c_in_per_group, cfg.c_out_per_group
    cycles = busy = sats = stalls = ma_weights = 0

    for grp in range(cfg.groups):
        for p0 in range(0, co_g, mode.p_eff):
            q = np.arange(grp * co_g + p0, grp * co_g + min(co_g, p0 + mode.p_eff))
            lanes = len(q)
            tile = Tile.from_mode(mode, lanes)
            # (k, j) -> (w_f, lanes) contiguous weights for this pass
            wts = [[np.ascontiguousarray(filters[j, :, k, :][:, q]) for j in range(cfg.h_f)]
                   for k in range(ci_g)]
            for start, n, pieces in segments:
                tile.preload(np.broadcast_to(bias[q][:, None], (lanes, n)))
                for k in range(ci_g):
                    plane = xs[grp * ci_g + k]
                    for j in range(cfg.h_f):
                        wt = wts[k][j]
                        ma_weights += w_f * lanes
                        for z, t0, count, offset in pieces:
                            if t0 == 0 and z > 0:
                                tile.weight_passing_stall(overlap=w_f - s if offset else 0)
                            row = plane[z * s + j, t0 * s: t0 * s + s * count + w_f - s]
                            tile._run(row, wt, offset, count)
                out[q, start:start + n] = requantize_relu(tile.read_outputs(n))
            cycles += tile.total_cycles
            stalls += tile.stall_cycles
            busy += int(tile.busy.sum()) * lanes
            sats += tile.saturations

    return SimResult("conv", Tensor3(out.reshape(cfg.c_out, cfg.h_out, cfg.w_out)),
                     cycles, cycles, ma_weights, hw * cfg.c_out, busy, sats,
                     engine.total_pes, stalls, layer)


def run_fc_layer(cfg: FcLayerConfig, x, w, b, engine: EngineConfig | None = None,
                 layer: int = 1) -> SimResult:
    """``w`` is (m, n) raw WeightQ, ``x`` (n,) and ``b`` (m,) raw ActivationQ."""
    engine = engine or EngineConfig()
    x = np.asarray(x, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if x.shape != (cfg.n,) or w.shape != (cfg.m, cfg.n) or b.shape != (cfg.m,):
        raise ShapeError(f"fc shapes disagree with n={cfg.n}, m={cfg.m}: "
                         f"x {x.shape}, w {w.shape}, b {b.shape}")
    p = engine.total_pes
    tile = FcTile(p)
    out = np.zeros(cfg.m, dtype=np.int16)
    for m0 in range(0, cfg.m, p):
        m1 = min(cfg.m, m0 + p)
        out[m0:m1] = requantize_relu(tile.run_pass(x, w[m0:m1], b[m0:m1]))
    return SimResult("fc", out, tile.total_cycles, tile.pixel_reads, tile.weight_loads,
                     cfg.m, tile.busy_pe_cycles, tile.saturations, p, 0, layer)


@dataclass
class NetworkResult:
    network: str
    layers: list
    kinds: list
    conv_clock_hz: float
    fc_clock_hz: float
    writeback_cycles: list = field(default_factory=list)

    def _sum(self, attr, kind=None):
        return sum(getattr(r, attr) for r in self.layers if kind in (None, r.kind))

    @property
    def conv_cycles(self) -> int:
        return self._sum("cycles", "conv") + sum(self.writeback_cycles)

    @property
    def fc_cycles(self) -> int:
        return self._sum("cycles", "fc")

    @property
    def latency_s(self) -> float:
        return self.conv_cycles / self.conv_clock_hz + self.fc_cycles / self.fc_clock_hz

    @property
    def throughput_fps(self) -> float:
        return 1.0 / self.latency_s

    @property
    def ma_words(self) -> int:
        return sum(r.ma_inputs + r.ma_weights + r.ma_outputs for r in self.layers)

    @property
    def ma_mb(self) -> float:
        return words_to_mb(self.ma_words)

    @property
    def saturations(self) -> int:
        return self._sum("saturations")

    def to_dict(self) -> dict:
        return {"network": self.network, "layers": [r.to_record() for r in self.layers],
                "totals": {"conv_cycles": self.conv_cycles, "fc_cycles": self.fc_cycles,
                           "latency_ms": self.latency_s * 1e3,
                           "throughput_fps": self.throughput_fps, "ma_mb": self.ma_mb,
                           "saturations": self.saturations}}


def default_workers() -> int:
    cap = os.environ.get("GFID_SIM_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def _flatten_into(prev, cfg):
    """Adapt the previous layer's output to the next layer's input."""
    if cfg.kind == "conv":
        if not isinstance(prev, Tensor3) or prev.data.shape != (cfg.c_in, cfg.h_in, cfg.w_in):
            raise ShapeError(f"chained input does not match conv layer input {cfg}")
        return prev
    flat = np.asarray(prev.data if isinstance(prev, Tensor3) else prev).reshape(-1)
    if flat.shape != (cfg.n,):
        raise ShapeError(f"chained input of {flat.size} values does not match fc n={cfg.n}")
    return flat


def _run_layer(index, cfg, params, x, engine):
    if cfg.kind == "conv":
        return run_conv_layer(cfg, x, params, engine, layer=index)
    w, b = params
    return run_fc_layer(cfg, x, w, b, engine, layer=index)


def run_network(net: NetworkDescriptor, params, inputs, engine: EngineConfig | None = None,
                cost: CostModel = CYCLE_LAW, workers: int | None = None) -> NetworkResult:
    """Simulate every layer of ``net``.

    ``params[i]`` is a FilterBank for conv layers and ``(w, b)`` for FC.
    ``inputs`` is either one input, chained through the layers (shapes must
    line up, conv maps are flattened into FC layers), or a list with one
    input per layer, in which case layers run independently and may run on
    ``workers`` threads.
    """
    engine = engine or EngineConfig()
    if len(params) != len(net.layers):
        raise ShapeError("need one parameter set per layer")
    if isinstance(inputs, (list, tuple)):
        if len(inputs) != len(net.layers):
            raise ShapeError("need one input per layer")
        jobs = list(enumerate(zip(net.layers, params, inputs), start=1))
        workers = workers or default_workers()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda a: _run_layer(a[0], *a[1], engine), jobs))
        else:
            results = [_run_layer(i, *args, engine) for i, args in jobs]
    else:
        results, cur = [], inputs
        for i, (cfg, prm) in enumerate(zip(net.layers, params), start=1):
            r = _run_layer(i, cfg, prm, _flatten_into(cur, cfg), engine)
            results.append(r)
            cur = r.output
    wb = [writeback_stall(cfg, r.cycles, cost)
          for cfg, r in zip(net.layers, results) if cfg.kind == "conv"]
    return NetworkResult(net.name, results, [c.kind for c in net.layers],
                         engine.conv_clock_hz, engine.fc_clock_hz, wb)


@dataclass(frozen=True)
class PipelinePlan:
    stages: int
    stage_bound: int
    parallel_tiles: int

    @property
    def unpipelined_words(self) -> int:
        """16-bit values per cycle: one pixel plus 6 weights per tile."""
        return 1 + 6 * self.parallel_tiles

    @property
    def pipelined_words(self) -> float:
        return 1 + 6 * self.parallel_tiles / self.stages

    @property
    def unpipelined_bits(self) -> int:
        return 16 * self.unpipelined_words

    @property
    def pipelined_bits(self) -> float:
        return 16 * self.pipelined_words


def plan_pipeline(cfg: ConvLayerConfig | None, mode: TileModeConfig, stages: int = 1,
                  engine: EngineConfig | None = None) -> PipelinePlan:
    """Stage bound floor((s*N_eff + w_f - s) / w_f) and input bandwidth."""
    engine = engine or EngineConfig()
    if cfg is not None and (cfg.w_f, cfg.s) != (mode.w_f, mode.s):
        raise ShapeError("layer does not run in the given mode")
    bound = (mode.s * mode.n_eff + mode.w_f - mode.s) // mode.w_f
    if not 1 <= stages <= bound:
        raise ValueError(f"stages must be in 1..{bound}")
    return PipelinePlan(stages, bound, engine.physical_tiles)
