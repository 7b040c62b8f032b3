"""Cycle-accurate model of one reconfigurable tile (or a lockstep array of them).

A logical tile of ``t_group`` PEs shares one pixel stream. Output ``g`` of a
segment is computed by PE ``g % t_group`` into partial-sum slot
``g // t_group``. ``lanes`` logical tiles run in lockstep on the same pixels
with their own weights, which is how parallel tiles are modelled.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CapacityError, ModeError, ShapeError
from .gfid import PES_PER_TILE, REGISTERS_PER_SET, TileModeConfig, active_pe_count


def rotation_tap(s: int, t_group: int, pe: int, cycle: int, first_pe: int = 0) -> int | None:
    """Rotation-path position PE ``pe`` reads at ``cycle``; None before it starts.

    ``first_pe`` is the PE holding the first output of the row piece.
    Positions >= w_f are zero slots.
    """
    lag = s * ((pe - first_pe) % t_group)
    if cycle < lag:
        return None
    return (cycle - lag) % (s * t_group)


class WeightGenerator:
    """Register sets feeding one physical tile.

    In mode (w_f, s) the rotation path of a logical tile runs through the
    first ``s`` registers of each of its ``t_group`` sets. The path holds
    W_1..W_wf followed by zeros; PE q taps the path ``s`` cycles after PE q-1.
    """

    def __init__(self, w_f: int, s: int, t_group: int):
        if w_f > REGISTERS_PER_SET or t_group > PES_PER_TILE or s * t_group < w_f:
            raise ModeError(f"generator cannot host (w_f={w_f}, s={s}, t_group={t_group})")
        self.w_f, self.s, self.t_group = w_f, s, t_group
        self.register_sets = np.zeros((PES_PER_TILE, REGISTERS_PER_SET), dtype=np.int16)

    @property
    def logical_tiles(self) -> int:
        return PES_PER_TILE // self.t_group

    def path(self, logical_tile: int = 0) -> list[tuple[int, int]]:
        """(set, register) pairs along the rotation path, in order."""
        base = logical_tile * self.t_group
        return [(base + k, r) for k in range(self.t_group) for r in range(self.s)]

    def load(self, weights) -> None:
        """Load ``(logical_tiles, w_f)`` raw weights (or one row for all)."""
        w = np.atleast_2d(np.asarray(weights, dtype=np.int16))
        if w.shape[1] != self.w_f:
            raise ShapeError(f"expected {self.w_f} weights per logical tile")
        if w.shape[0] == 1:
            w = np.repeat(w, self.logical_tiles, axis=0)
        self.register_sets[:] = 0
        for lt in range(min(self.logical_tiles, w.shape[0])):
            for pos, (k, r) in enumerate(self.path(lt)):
                if pos < self.w_f:
                    self.register_sets[k, r] = w[lt, pos]

    def ring(self, logical_tile: int = 0) -> np.ndarray:
        return np.array([self.register_sets[k, r] for k, r in self.path(logical_tile)])

    def zero_slots(self) -> int:
        return self.s * self.t_group - self.w_f

    def tap(self, pe: int, cycle: int, first_pe: int = 0) -> int | None:
        return rotation_tap(self.s, self.t_group, pe, cycle, first_pe)


@dataclass
class PeState:
    acc_memory: np.ndarray
    busy_cycles: int


@dataclass
class TraceEvent:
    cycle: int
    pe: int
    busy: bool
    weight_index: int  # -1 when idle
    acc_slot: int      # -1 when idle
    output: int        # segment output index, -1 when idle


@dataclass
class TileTrace:
    total_cycles: int
    busy_cycles: np.ndarray  # per PE of one logical tile
    lanes: int
    weight_loads: int
    pixel_reads: int
    saturations: int = 0
    events: list = field(default_factory=list)

    @property
    def busy_pe_cycles(self) -> int:
        return int(self.busy_cycles.sum()) * self.lanes

    @property
    def busy_ratio(self) -> float:
        t_group = len(self.busy_cycles)
        return float(self.busy_cycles.sum()) / (t_group * self.total_cycles) if self.total_cycles else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["cycle", "pe", "busy", "weight_index", "acc_slot"])
            for e in self.events:
                out.writerow([e.cycle, e.pe, int(e.busy), e.weight_index, e.acc_slot])


class Tile:
    """``lanes`` lockstep logical tiles of ``t_group`` PEs in one (w_f, s) mode."""

    def __init__(self, w_f: int, s: int, t_group: int, lanes: int = 1, acc_depth: int = 64):
        if t_group < active_pe_count(w_f, s):
            raise ModeError(f"t_group={t_group} < ceil(w_f/s) for (w_f={w_f}, s={s})")
        self.w_f, self.s, self.t_group = w_f, s, t_group
        self.lanes, self.acc_depth = lanes, acc_depth
        self.acc = np.zeros((t_group, acc_depth, lanes), dtype=np.int64)
        self.busy = np.zeros(t_group, dtype=np.int64)
        self.total_cycles = 0
        self.stall_cycles = 0
        self.weight_loads = 0
        self.pixel_reads = 0
        self.saturations = 0
        self.generator = (WeightGenerator(w_f, s, t_group)
                          if w_f <= REGISTERS_PER_SET and t_group <= PES_PER_TILE else None)

    @classmethod
    def from_mode(cls, mode: TileModeConfig, lanes: int | None = None) -> "Tile":
        if lanes is None:
            lanes = mode.logical_tiles_per_physical
        return cls(mode.w_f, mode.s, mode.t_group, lanes, mode.acc_depth)

    @property
    def capacity(self) -> int:
        return self.t_group * self.acc_depth

    def pe_state(self, pe: int, lane: int = 0) -> PeState:
        return PeState(self.acc[pe, :, lane].copy(), int(self.busy[pe]))

    def _slots(self, first_output: int, n: int):
        g = np.arange(first_output, first_output + n)
        return g % self.t_group, g // self.t_group

    def preload(self, values, first_output: int = 0) -> None:
        """Write ``(lanes, n)`` raw values into the slots of outputs first_output.."""
        v = np.asarray(values, dtype=np.int64)
        if v.ndim != 2 or v.shape[0] != self.lanes:
            raise ShapeError(f"preload needs shape (lanes={self.lanes}, n)")
        self._check_capacity(first_output, v.shape[1])
        pe, slot = self._slots(first_output, v.shape[1])
        self.acc[pe, slot, :] = v.T

    def read_outputs(self, n: int, first_output: int = 0) -> np.ndarray:
        """Partial sums of outputs first_output..first_output+n-1 as (lanes, n)."""
        self._check_capacity(first_output, n)
        pe, slot = self._slots(first_output, n)
        return self.acc[pe, slot, :].T.copy()

    def _check_capacity(self, first_output: int, n: int) -> None:
        if n < 1 or first_output < 0 or first_output + n > self.capacity:
            raise CapacityError(
                f"outputs {first_output}..{first_output + n - 1} exceed the "
                f"{self.capacity}-entry partial-sum capacity"
            )

    def _weights_matrix(self, weights) -> np.ndarray:
        w = np.asarray(weights, dtype=np.int64)
        if w.ndim == 1:
            w = np.broadcast_to(w[:, None], (w.shape[0], self.lanes))
        else:
            w = w.T
        if w.shape != (self.w_f, self.lanes):
            raise ShapeError(f"weights must be ({self.lanes}, {self.w_f}) or ({self.w_f},)")
        return np.ascontiguousarray(w)

    def run_row_pass(self, pixels, weights, n: int, accumulate: bool = True,
                     first_output: int = 0, record: bool = False) -> TileTrace:
        """Stream ``s*n + w_f - s`` pixels through the tile.

        ``weights`` is ``(w_f,)`` shared by all lanes or ``(lanes, w_f)``.
        """
        self._check_capacity(first_output, n)
        px = np.ascontiguousarray(pixels, dtype=np.int64)
        need = self.s * n + self.w_f - self.s
        if px.shape != (need,):
            raise ShapeError(f"row pass of {n} outputs needs {need} pixels, got {px.shape}")
        w = self._weights_matrix(weights)
        if not accumulate:
            pe, slot = self._slots(first_output, n)
            self.acc[pe, slot, :] = 0
        if self.generator is not None:
            self.generator.load(w.T[: self.generator.logical_tiles])
        return self._run(px, w, first_output, n, record)

    def _run(self, px, w, first_output, n, record=False) -> TileTrace:
        busy = np.zeros(self.t_group, dtype=np.int64)
        sats = kernels.conv_row_pass(px, w, self.acc, self.s, self.t_group, first_output, n, busy)
        cycles = px.shape[0]
        self.busy += busy
        self.total_cycles += cycles
        self.pixel_reads += cycles
        self.weight_loads += self.w_f * self.lanes
        self.saturations += sats
        trace = TileTrace(cycles, busy, self.lanes, self.w_f * self.lanes, cycles, sats)
        if record:
            trace.events = self._events(cycles, first_output, n)
        return trace

    def _events(self, cycles: int, first_output: int, n: int) -> list[TraceEvent]:
        """Per-cycle, per-PE activity derived from the weight generator taps."""
        first_pe = first_output % self.t_group
        ring = self.s * self.t_group
        events = []
        for c in range(cycles):
            for q in range(self.t_group):
                pos = rotation_tap(self.s, self.t_group, q, c, first_pe)
                local = (q - first_pe) % self.t_group
                u = None if pos is None else local + self.t_group * ((c - self.s * local) // ring)
                if pos is not None and pos < self.w_f and u < n:
                    g = first_output + u
                    events.append(TraceEvent(c, q, True, pos, g // self.t_group, g))
                else:
                    events.append(TraceEvent(c, q, False, -1, -1, -1))
        return events

    def weight_passing_stall(self, overlap: int = 0) -> int:
        """Charge the row-boundary weight shift; returns idle cycles added.

        The shift costs ``w_f - 1`` cycles beyond the no-boundary schedule;
        ``overlap`` of them may be hidden behind pixels streamed anyway.
        """
        idle = max(0, self.w_f - 1 - overlap)
        self.total_cycles += idle
        self.stall_cycles += idle
        return idle

    def trace(self) -> TileTrace:
        """Cumulative counters since construction."""
        return TileTrace(self.total_cycles, self.busy.copy(), self.lanes,
                         self.weight_loads, self.pixel_reads, self.saturations)


def weight_passing_stall(tile: Tile, w_f: int | None = None, overlap: int = 0) -> int:
    if w_f is not None and w_f != tile.w_f:
        raise ModeError(f"tile is configured for w_f={tile.w_f}, not {w_f}")
    return tile.weight_passing_stall(overlap)


class FcTile:
    """Fully-connected mode: every PE is an independent neuron fed directly."""

    def __init__(self, lanes: int = PES_PER_TILE):
        self.lanes = lanes
        self.acc = np.zeros(lanes, dtype=np.int64)
        self.total_cycles = 0
        self.busy_pe_cycles = 0
        self.weight_loads = 0
        self.pixel_reads = 0
        self.saturations = 0

    def run_pass(self, x, weights, bias=None, active: int | None = None) -> np.ndarray:
        """``weights`` is (active, n); returns the active accumulators."""
        w = np.asarray(weights, dtype=np.int64)
        active = w.shape[0] if active is None else active
        if active > self.lanes or w.shape[0] != active:
            raise CapacityError(f"{active} neurons exceed {self.lanes} PEs")
        xs = np.ascontiguousarray(x, dtype=np.int64)
        if w.shape[1] != xs.shape[0]:
            raise ShapeError("weight columns must match input length")
        acc = np.zeros(active, dtype=np.int64) if bias is None else np.array(bias, dtype=np.int64)
        self.saturations += kernels.fc_pass(xs, np.ascontiguousarray(w.T), acc)
        n = xs.shape[0]
        self.total_cycles += n
        self.pixel_reads += n
        self.weight_loads += n * active
        self.busy_pe_cycles += n * active
        self.acc[:active] = acc
        return acc


def configure(mode) -> Tile | FcTile:
    """One physical tile regrouped for ``mode`` (a TileModeConfig or "fc")."""
    if isinstance(mode, str):
        if mode != "fc":
            raise ModeError(f"unknown tile mode {mode!r}")
        return FcTile(PES_PER_TILE)
    if not isinstance(mode, TileModeConfig):
        raise ModeError("configure expects a TileModeConfig or 'fc'")
    return Tile.from_mode(mode)
