"""Engine-level hardware parameters."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ModeError
from .gfid import PES_PER_TILE, TileModeConfig, tile_mode


@dataclass(frozen=True)
class EngineConfig:
    physical_tiles: int = 32
    pes_per_tile: int = 6
    acc_depth: int = 64
    conv_clock_hz: float = 200e6
    fc_clock_hz: float = 40e6

    def __post_init__(self):
        if min(self.physical_tiles, self.pes_per_tile, self.acc_depth) < 1:
            raise ValueError("engine extents must be positive")
        if self.conv_clock_hz <= 0 or self.fc_clock_hz <= 0:
            raise ValueError("clocks must be positive")

    @property
    def total_pes(self) -> int:
        return self.physical_tiles * self.pes_per_tile

    def mode(self, w_f: int, s: int) -> TileModeConfig:
        if self.pes_per_tile != PES_PER_TILE:
            raise ModeError(f"conv modes are defined for {PES_PER_TILE}-PE tiles")
        return tile_mode(w_f, s, physical_tiles=self.physical_tiles, acc_depth=self.acc_depth)
