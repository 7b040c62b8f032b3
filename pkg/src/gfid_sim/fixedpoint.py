"""Bit-true 16-bit fixed-point datapath.

Activations use Q13.2 (2 fractional bits), weights Q0.15. Products are
aligned back to the activation scale with an arithmetic shift right by 15
and summed into a saturating 24-bit accumulator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INT16_MIN = -(1 << 15)
INT16_MAX = (1 << 15) - 1
ACC_MIN = -(1 << 23)
ACC_MAX = (1 << 23) - 1
PRODUCT_SHIFT = 15


@dataclass(frozen=True)
class QFormat:
    name: str
    frac_bits: int

    @property
    def scale(self) -> float:
        return float(1 << self.frac_bits)

    @property
    def lsb(self) -> float:
        return 1.0 / self.scale

    @property
    def min_value(self) -> float:
        return INT16_MIN / self.scale

    @property
    def max_value(self) -> float:
        return INT16_MAX / self.scale


ACTIVATION_Q = QFormat("ActivationQ", 2)
WEIGHT_Q = QFormat("WeightQ", 15)


@dataclass
class SaturationCounter:
    """Mutable tally of saturation events for one run."""

    count: int = 0

    def add(self, n: int) -> None:
        self.count += int(n)


@dataclass(frozen=True)
class Fixed16:
    raw: int
    format: QFormat = ACTIVATION_Q

    def __post_init__(self):
        if not INT16_MIN <= self.raw <= INT16_MAX:
            raise ValueError(f"raw value {self.raw} outside int16")

    @property
    def value(self) -> float:
        return self.raw / self.format.scale


@dataclass(frozen=True)
class Acc24:
    raw: int = 0

    def __post_init__(self):
        if not ACC_MIN <= self.raw <= ACC_MAX:
            raise ValueError(f"raw value {self.raw} outside 24-bit range")

    @property
    def value(self) -> float:
        """Real value in the activation scale."""
        return self.raw / ACTIVATION_Q.scale


def quantize_array(x, fmt: QFormat, counter: SaturationCounter | None = None) -> np.ndarray:
    """Round half to even and saturate; returns int16 raw values."""
    scaled = np.rint(np.asarray(x, dtype=np.float64) * fmt.scale)
    clipped = np.clip(scaled, INT16_MIN, INT16_MAX)
    if counter is not None:
        counter.add(np.count_nonzero(clipped != scaled))
    return clipped.astype(np.int16)


def quantize(x: float, fmt: QFormat, counter: SaturationCounter | None = None) -> Fixed16:
    return Fixed16(int(quantize_array(x, fmt, counter)), fmt)


def dequantize(f: Fixed16) -> float:
    return f.value


def saturate24(v: int, counter: SaturationCounter | None = None) -> int:
    if v > ACC_MAX:
        if counter is not None:
            counter.add(1)
        return ACC_MAX
    if v < ACC_MIN:
        if counter is not None:
            counter.add(1)
        return ACC_MIN
    return v


def mac(acc: Acc24, x: Fixed16, w: Fixed16, counter: SaturationCounter | None = None) -> Acc24:
    """acc + asr(x * w, 15), saturated to 24 bits."""
    if x.format != ACTIVATION_Q or w.format != WEIGHT_Q:
        raise ValueError("mac expects an ActivationQ pixel and a WeightQ weight")
    return Acc24(saturate24(acc.raw + ((x.raw * w.raw) >> PRODUCT_SHIFT), counter))


def mac_array(acc: np.ndarray, x, w) -> tuple[np.ndarray, int]:
    """Element-wise mac over int64 arrays; returns (new_acc, saturations)."""
    wide = acc + ((np.asarray(x, dtype=np.int64) * np.asarray(w, dtype=np.int64)) >> PRODUCT_SHIFT)
    out = np.clip(wide, ACC_MIN, ACC_MAX)
    return out, int(np.count_nonzero(out != wide))


def requantize_relu(acc: np.ndarray) -> np.ndarray:
    """ReLU on the accumulator, then saturate to ActivationQ raw int16."""
    return np.clip(np.asarray(acc, dtype=np.int64), 0, INT16_MAX).astype(np.int16)
