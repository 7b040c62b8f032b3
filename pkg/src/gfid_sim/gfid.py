"""GFID schedule matrices, PE grouping and utilization formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import ModeError, PreconditionError

PES_PER_TILE = 6
REGISTERS_PER_SET = 11

# (w_f, s) -> PEs per logical tile in the reconfigurable tile.
_T_GROUP = {(11, 4): 3, (7, 2): 6, (5, 1): 6, (3, 1): 3, (1, 1): 1}
SUPPORTED_MODES = tuple(_T_GROUP)


@dataclass(frozen=True)
class GfidSchedule:
    """Sparse matrix M: row r is a clock cycle (input pixel), column c an output.

    ``entries[(r, c)]`` is the zero-based weight index used at that cell.
    """

    w_f: int
    s: int
    n: int

    @property
    def rows(self) -> int:
        return self.s * self.n + self.w_f - self.s

    @property
    def entries(self) -> dict[tuple[int, int], int]:
        return {
            (self.s * c + k, c): k for c in range(self.n) for k in range(self.w_f)
        }

    def weight_index(self, r: int, c: int) -> int | None:
        k = r - self.s * c
        return k if 0 <= k < self.w_f else None

    def dense(self) -> np.ndarray:
        """(rows, n) int array of weight indices, -1 where M is empty."""
        m = np.full((self.rows, self.n), -1, dtype=np.int64)
        for (r, c), k in self.entries.items():
            m[r, c] = k
        return m

    def matrix(self, weights) -> np.ndarray:
        """Dense M with weight values substituted; x @ M gives one output row."""
        w = np.asarray(weights)
        if w.shape != (self.w_f,):
            raise PreconditionError(f"need {self.w_f} weights, got shape {w.shape}")
        idx = self.dense()
        out = np.zeros(idx.shape, dtype=w.dtype)
        mask = idx >= 0
        out[mask] = w[idx[mask]]
        return out

    def render(self) -> str:
        """Text grid with one-based W_k labels and 0 for empty cells."""
        idx = self.dense()
        cells = [["0" if k < 0 else f"W{k + 1}" for k in row] for row in idx]
        width = max(len(c) for row in cells for c in row)
        return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells) + "\n"


def build_schedule(w_f: int, s: int, n: int) -> GfidSchedule:
    """Any positive sizes are accepted. With w_f < s some rows (skipped
    pixels) have no entry; no supported tile mode has that shape."""
    if w_f < 1 or s < 1 or n < 1:
        raise PreconditionError("w_f, s and n must all be >= 1")
    return GfidSchedule(w_f, s, n)


def active_pe_count(w_f: int, s: int) -> int:
    if w_f < 1 or s < 1:
        raise PreconditionError("w_f and s must be >= 1")
    return -(-w_f // s)


def utilization(w_f: int, s: int, t: int, n: int) -> Fraction:
    if t < active_pe_count(w_f, s):
        raise PreconditionError(f"t={t} below the {active_pe_count(w_f, s)} PEs the mode needs")
    if n < 1 or n % t:
        raise PreconditionError(f"n={n} is not a positive multiple of t={t}")
    return Fraction(n // t * w_f, s * n + w_f - s)


def utilization_max(w_f: int, s: int, t: int) -> Fraction:
    if t < 1:
        raise PreconditionError("t must be >= 1")
    return Fraction(w_f, t * s)


def mode_utilization(w_f: int, s: int, n) -> Fraction:
    """Utilization when a logical tile of t_group PEs runs a row of n outputs.

    Pass ``n=math.inf`` for the large-N limit.
    """
    t_group = _T_GROUP.get((w_f, s))
    if t_group is None:
        raise ModeError(f"unsupported mode (w_f={w_f}, s={s})")
    if n == math.inf:
        return Fraction(w_f, t_group * s)
    return Fraction(n * w_f, t_group * (s * n + w_f - s))


@dataclass(frozen=True)
class TileModeConfig:
    w_f: int
    s: int
    t: int
    t_group: int
    acc_depth: int = 64
    physical_tiles: int = 32
    pes_per_tile: int = PES_PER_TILE

    def __post_init__(self):
        if self.t != active_pe_count(self.w_f, self.s):
            raise ModeError("t must equal ceil(w_f / s)")
        if self.t_group < self.t or self.pes_per_tile % self.t_group:
            raise ModeError(f"t_group={self.t_group} cannot host t={self.t}")

    @property
    def logical_tiles_per_physical(self) -> int:
        return self.pes_per_tile // self.t_group

    @property
    def n_eff(self) -> int:
        return self.acc_depth * self.t_group

    @property
    def p_eff(self) -> int:
        return self.physical_tiles * self.logical_tiles_per_physical

    @property
    def ring_length(self) -> int:
        """Registers on the weight rotation path of one logical tile."""
        return self.s * self.t_group

    @property
    def zero_slots(self) -> int:
        return self.ring_length - self.w_f


def tile_mode(w_f: int, s: int, physical_tiles: int = 32, acc_depth: int = 64) -> TileModeConfig:
    t_group = _T_GROUP.get((w_f, s))
    if t_group is None:
        raise ModeError(
            f"unsupported mode (w_f={w_f}, s={s}); supported: {sorted(SUPPORTED_MODES)}"
        )
    return TileModeConfig(w_f, s, active_pe_count(w_f, s), t_group, acc_depth, physical_tiles)


def lcm_pe_count(t_values: Iterable[int]) -> int:
    values = list(t_values)
    if not values or any(int(v) < 1 for v in values):
        raise PreconditionError("need a non-empty set of positive integers")
    return math.lcm(*values)
