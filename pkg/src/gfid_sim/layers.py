"""Layer and network descriptors, tensors, and their file formats."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DimensionError, ShapeError

BUILTIN_MODES = frozenset({(1, 1), (3, 1), (5, 1), (7, 2), (11, 4)})


@dataclass(frozen=True)
class ConvLayerConfig:
    """Convolution geometry. ``h_in``/``w_in`` already include padding."""

    h_in: int
    w_in: int
    c_in: int
    h_f: int
    w_f: int
    s: int
    c_out: int
    groups: int = 1

    def __post_init__(self):
        for name in ("h_in", "w_in", "c_in", "h_f", "w_f", "s", "c_out", "groups"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")
        if self.h_in < self.h_f or self.w_in < self.w_f:
            raise DimensionError("filter larger than input")
        if (self.h_in - self.h_f) % self.s or (self.w_in - self.w_f) % self.s:
            raise DimensionError(
                f"(in - f) not divisible by stride {self.s}: "
                f"h {self.h_in}/{self.h_f}, w {self.w_in}/{self.w_f}"
            )
        if self.c_in % self.groups or self.c_out % self.groups:
            raise DimensionError(f"channels not divisible by groups={self.groups}")

    kind = "conv"

    @property
    def h_out(self) -> int:
        return (self.h_in - self.h_f + self.s) // self.s

    @property
    def w_out(self) -> int:
        return (self.w_in - self.w_f + self.s) // self.s

    @property
    def c_in_per_group(self) -> int:
        return self.c_in // self.groups

    @property
    def c_out_per_group(self) -> int:
        return self.c_out // self.groups

    @property
    def mode(self) -> tuple[int, int]:
        return (self.w_f, self.s)

    @property
    def weights(self) -> int:
        return self.h_f * self.w_f * self.c_in_per_group * self.c_out

    @property
    def macs(self) -> int:
        return self.h_out * self.w_out * self.c_out * self.h_f * self.w_f * self.c_in_per_group

    @property
    def ops(self) -> int:
        return 2 * self.macs

    def to_dict(self) -> dict:
        d = {"kind": "conv", "h_in": self.h_in, "w_in": self.w_in, "c_in": self.c_in,
             "h_f": self.h_f, "w_f": self.w_f, "s": self.s, "c_out": self.c_out}
        if self.groups != 1:
            d["groups"] = self.groups
        return d


@dataclass(frozen=True)
class FcLayerConfig:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DimensionError("n and m must be >= 1")

    kind = "fc"

    @property
    def weights(self) -> int:
        return self.n * self.m

    @property
    def macs(self) -> int:
        return self.n * self.m

    @property
    def ops(self) -> int:
        return 2 * self.macs

    def to_dict(self) -> dict:
        return {"kind": "fc", "n": self.n, "m": self.m}


LayerConfig = Union[ConvLayerConfig, FcLayerConfig]


def output_dims(cfg: ConvLayerConfig) -> tuple[int, int]:
    return cfg.h_out, cfg.w_out


@dataclass(frozen=True)
class NetworkDescriptor:
    """Ordered layers of a network.

    ``extra_conv_weights`` counts parameters of layers that exist in the
    model but are not scheduled on the engine (ResNet projection shortcuts).
    """

    name: str
    layers: tuple
    extra_conv_weights: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ShapeError("network has no layers")

    @property
    def conv_layers(self) -> list[ConvLayerConfig]:
        return [l for l in self.layers if l.kind == "conv"]

    @property
    def fc_layers(self) -> list[FcLayerConfig]:
        return [l for l in self.layers if l.kind == "fc"]

    @property
    def conv_macs(self) -> int:
        return sum(l.macs for l in self.conv_layers)

    @property
    def conv_weights(self) -> int:
        return sum(l.weights for l in self.conv_layers) + self.extra_conv_weights

    @property
    def fc_macs(self) -> int:
        return sum(l.macs for l in self.fc_layers)

    @property
    def fc_weights(self) -> int:
        return sum(l.weights for l in self.fc_layers)

    def to_dict(self) -> dict:
        d = {"name": self.name, "layers": [l.to_dict() for l in self.layers]}
        if self.extra_conv_weights:
            d["extra_conv_weights"] = self.extra_conv_weights
        return d


def layer_from_dict(d: dict) -> LayerConfig:
    kind = d.get("kind")
    try:
        if kind == "conv":
            return ConvLayerConfig(
                int(d["h_in"]), int(d["w_in"]), int(d["c_in"]), int(d["h_f"]),
                int(d["w_f"]), int(d["s"]), int(d["c_out"]), int(d.get("groups", 1)),
            )
        if kind == "fc":
            return FcLayerConfig(int(d["n"]), int(d["m"]))
    except KeyError as exc:
        raise ShapeError(f"layer descriptor missing field {exc}") from None
    raise ShapeError(f"unknown layer kind {kind!r}")


def network_from_dict(d: dict) -> NetworkDescriptor:
    if "layers" not in d:
        raise ShapeError("network descriptor has no 'layers'")
    return NetworkDescriptor(
        name=str(d.get("name", "custom")),
        layers=tuple(layer_from_dict(l) for l in d["layers"]),
        extra_conv_weights=int(d.get("extra_conv_weights", 0)),
    )


def load_network(path) -> NetworkDescriptor:
    with open(path, encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


def save_network(net: NetworkDescriptor, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Channel-major activation map: ``data[c, h, w]``."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, copy=True)
        if arr.ndim != 3:
            raise ShapeError(f"Tensor3 needs a 3-D array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, height, width, channels, dtype=np.int16) -> "Tensor3":
        return cls(np.zeros((channels, height, width), dtype=dtype))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def __eq__(self, other):
        return isinstance(other, Tensor3) and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Filters indexed ``filters[j, i, k, q]`` plus one bias per output channel.

    For grouped layers ``k`` runs over the channels of the filter's own group.
    """

    filters: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        f = np.array(self.filters, copy=True)
        b = np.array(self.biases, copy=True)
        if f.ndim != 4:
            raise ShapeError(f"filters must be 4-D (h_f, w_f, c_in, c_out), got {f.shape}")
        if b.shape != (f.shape[3],):
            raise ShapeError(f"bias length {b.shape} does not match c_out {f.shape[3]}")
        f.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "filters", f)
        object.__setattr__(self, "biases", b)

    def check(self, cfg: ConvLayerConfig) -> None:
        want = (cfg.h_f, cfg.w_f, cfg.c_in_per_group, cfg.c_out)
        if self.filters.shape != want:
            raise ShapeError(f"filter shape {self.filters.shape} != {want}")


def check_input(x: Tensor3, cfg: ConvLayerConfig) -> None:
    want = (cfg.c_in, cfg.h_in, cfg.w_in)
    if x.data.shape != want:
        raise ShapeError(f"input shape {x.data.shape} != (c, h, w) {want}")


TENSOR_MAGIC = b"GT16"
_HEADER = struct.Struct("<4sIII")


def write_tensor(t: Tensor3, path) -> None:
    """16-byte header (magic, h, w, c) then little-endian int16 in (c, h, w) order."""
    raw = np.asarray(t.data)
    if raw.dtype != np.int16:
        raise ShapeError("only int16 raw tensors can be written")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TENSOR_MAGIC, t.height, t.width, t.channels))
        fh.write(raw.astype("<i2").tobytes())


def read_tensor(path) -> Tensor3:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ShapeError("tensor file shorter than its header")
    magic, h, w, c = _HEADER.unpack_from(blob)
    if magic != TENSOR_MAGIC:
        raise ShapeError(f"bad tensor magic {magic!r}")
    body = blob[_HEADER.size:]
    if len(body) != 2 * h * w * c:
        raise ShapeError(f"payload has {len(body)} bytes, expected {2 * h * w * c}")
    data = np.frombuffer(body, dtype="<i2").astype(np.int16).reshape(c, h, w)
    return Tensor3(data)
