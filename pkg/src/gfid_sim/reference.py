"""Loader for the shipped per-layer and whole-network reference values."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


def _rows(name: str) -> list[dict]:
    text = resources.files("gfid_sim").joinpath("data", name).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _num(v: str) -> float | None:
    return float(v) if v not in ("", None) else None


@dataclass(frozen=True)
class LayerReference:
    network: str
    layer: int
    efficiency_pct: float | None
    memory_mb: float | None
    latency_ms: float | None


@dataclass(frozen=True)
class TotalReference:
    network: str
    kind: str
    latency_ms: float
    throughput_fps: float
    performance_gops: float
    efficiency_pct: float
    memory_mb: float


@lru_cache(maxsize=None)
def layer_series(network: str) -> tuple[LayerReference, ...]:
    return tuple(
        LayerReference(r["network"], int(r["layer"]), _num(r["efficiency_pct"]),
                       _num(r["memory_mb"]), _num(r["latency_ms"]))
        for r in _rows("layer_series.csv") if r["network"] == network
    )


@lru_cache(maxsize=None)
def totals(network: str) -> dict[str, TotalReference]:
    out = {}
    for r in _rows("network_totals.csv"):
        if r["network"] == network:
            out[r["kind"]] = TotalReference(
                r["network"], r["kind"], float(r["latency_ms"]), float(r["throughput_fps"]),
                float(r["performance_gops"]), float(r["efficiency_pct"]), float(r["memory_mb"]),
            )
    return out


def networks() -> list[str]:
    return sorted({r["network"] for r in _rows("network_totals.csv")})
