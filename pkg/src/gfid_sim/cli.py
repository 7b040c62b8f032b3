"""Command-line front end: report, simulate, validate, schedule."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, reference
from .engine import EngineConfig, default_workers, run_conv_layer, run_fc_layer
from .errors import GfidError
from .fixedpoint import ACC_MAX, INT16_MAX
from .gfid import build_schedule
from .layers import ConvLayerConfig, FcLayerConfig, FilterBank, Tensor3, load_network
from .networks import BUILTIN_NETWORKS, builtin_network
from .oracle import conv_forward, fc_forward
from .perf import PROFILES, conv_cycles, fc_cycles, network_report, report_rows, report_to_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_SCHEDULE_ROWS = 10_000


class UsageError(Exception):
    """Bad arguments or unreadable/unwritable files (exit code 2)."""


@dataclass(frozen=True)
class RunSpec:
    command: str
    network: str | None = None
    layers: str | None = None
    out: str | None = None
    format: str = "text"
    scale: int = 1
    seed: int = 0
    compare: bool = False
    model: str = "calibrated"

    def __post_init__(self):
        if self.scale < 1:
            raise UsageError("--scale must be >= 1")
        if self.format not in ("json", "csv", "text"):
            raise UsageError(f"unknown format {self.format!r}")


def resolve_network(name: str):
    if name is None:
        raise UsageError("no network given (use --network NAME|PATH)")
    if name.lower() in BUILTIN_NETWORKS:
        return builtin_network(name)
    if os.path.exists(name):
        try:
            return load_network(name)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read network file {name}: {exc}") from None
    raise UsageError(f"unknown network {name!r}: not a built-in name or an existing file")


def parse_layers(text: str | None, count: int) -> list[int]:
    """'1-5,7' -> [1, 2, 3, 4, 5, 7] (1-based, sorted, deduplicated)."""
    if not text:
        return list(range(1, count + 1))
    picked = set()
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
            else:
                lo = hi = int(part)
            if lo < 1 or hi > count or lo > hi:
                raise UsageError(f"layer range {part!r} outside 1..{count}")
            picked.update(range(lo, hi + 1))
    except ValueError:
        raise UsageError(f"bad layer range {text!r}") from None
    return sorted(picked)


def scale_layer(cfg, k: int):
    """Divide channel counts (or FC sizes) by k, rounding up; groups kept whole."""
    if k == 1:
        return cfg
    if cfg.kind == "fc":
        return FcLayerConfig(math.ceil(cfg.n / k), math.ceil(cfg.m / k))
    g = cfg.groups
    c_in = math.ceil(math.ceil(cfg.c_in / k) / g) * g
    c_out = math.ceil(math.ceil(cfg.c_out / k) / g) * g
    return ConvLayerConfig(cfg.h_in, cfg.w_in, c_in, cfg.h_f, cfg.w_f, cfg.s, c_out, g)


def random_layer_data(cfg, rng: np.random.Generator):
    """Random raw operands sized so no accumulator can saturate."""
    fan_in = (cfg.h_f * cfg.w_f * cfg.c_in_per_group) if cfg.kind == "conv" else cfg.n
    amp = max(1, min(INT16_MAX, (ACC_MAX - 256) // fan_in))
    if cfg.kind == "conv":
        x = Tensor3(rng.integers(-amp, amp + 1, (cfg.c_in, cfg.h_in, cfg.w_in), dtype=np.int16))
        w = FilterBank(
            rng.integers(-INT16_MAX, INT16_MAX + 1, (cfg.h_f, cfg.w_f, cfg.c_in_per_group, cfg.c_out),
                         dtype=np.int16),
            rng.integers(-128, 128, cfg.c_out, dtype=np.int16),
        )
        return x, w
    x = rng.integers(-amp, amp + 1, cfg.n, dtype=np.int16)
    w = rng.integers(-INT16_MAX, INT16_MAX + 1, (cfg.m, cfg.n), dtype=np.int16)
    b = rng.integers(-128, 128, cfg.m, dtype=np.int16)
    return x, (w, b)


def segment_slack(cfg: ConvLayerConfig, engine: EngineConfig) -> int:
    """Largest allowed gap between measured and modelled cycles."""
    mode = engine.mode(cfg.w_f, cfg.s)
    passes = cfg.groups * cfg.h_f * cfg.c_in_per_group * math.ceil(cfg.c_out_per_group / mode.p_eff)
    return (cfg.w_f - cfg.s) * passes + 1


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


def _table(rows: list[dict], fields: list[str]) -> str:
    widths = {f: max(len(f), *(len(str(r.get(f, ""))) for r in rows)) for f in fields}
    lines = ["  ".join(f.rjust(widths[f]) for f in fields)]
    lines += ["  ".join(str(r.get(f, "")).rjust(widths[f]) for f in fields) for r in rows]
    return "\n".join(lines) + "\n"


def _csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    out = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    out.writeheader()
    out.writerows(rows)
    return buf.getvalue()


# -- report -----------------------------------------------------------------

def _total_rows(report, refs) -> list[dict]:
    rows = []
    for kind in ("conv", "fc"):
        summ = report.summary(kind)
        if not summ.layers:
            continue
        row = {"layer": f"{kind}_total", "kind": "total", "cycles": summ.cycles,
               "latency_ms": f"{summ.latency_s * 1e3:.4f}", "ma_mb": f"{summ.ma_mb:.4f}",
               "efficiency_pct": f"{100 * summ.efficiency:.2f}"}
        ref = refs.get(kind)
        if ref is not None:
            row.update(
                ref_latency_ms=f"{ref.latency_ms:g}",
                delta_latency_ms=f"{summ.latency_s * 1e3 - ref.latency_ms:.4f}",
                ref_ma_mb=f"{ref.memory_mb:g}", delta_ma_mb=f"{summ.ma_mb - ref.memory_mb:.4f}",
                ref_efficiency_pct=f"{ref.efficiency_pct:g}",
                delta_efficiency_pct=f"{100 * summ.efficiency - ref.efficiency_pct:.2f}",
            )
        rows.append(row)
    return rows


def cmd_report(spec: RunSpec) -> int:
    net = resolve_network(spec.network)
    if spec.model not in PROFILES:
        raise UsageError(f"unknown cost model {spec.model!r}; choose from {sorted(PROFILES)}")
    full = network_report(net, cost=spec.model)
    report = full.select(parse_layers(spec.layers, len(net.layers)))
    layer_refs = totals = None
    if spec.compare:
        if net.name not in reference.networks():
            raise UsageError(f"no reference data for network {net.name!r}")
        layer_refs = {r.layer: r for r in reference.layer_series(net.name)}
        totals = reference.totals(net.name)
    if spec.format == "json":
        d = report.to_dict()
        if spec.compare:
            d["comparison"] = {"layers": report_rows(report, layer_refs),
                               "totals": _total_rows(report, totals)}
        text = json.dumps(d, indent=2) + "\n"
    elif spec.format == "csv":
        text = report_to_csv(report, layer_refs)
        if spec.compare:
            from .perf import COMPARE_FIELDS, CSV_FIELDS
            text += _csv(_total_rows(report, totals), CSV_FIELDS + COMPARE_FIELDS).split("\n", 1)[1]
    else:
        rows = report_rows(report, layer_refs)
        fields = list(rows[0]) if rows else ["layer"]
        if spec.compare:
            rows += _total_rows(report, totals)
        text = f"network {net.name} (cost model: {report.model})\n" + _table(rows, fields)
        for kind in ("conv", "fc"):
            summ = report.summary(kind)
            if summ.layers:
                text += (f"{kind}: {summ.latency_s * 1e3:.3f} ms, {summ.ma_mb:.3f} MB, "
                         f"{summ.performance_gops:.2f} Gops, efficiency {100 * summ.efficiency:.2f}%\n")
    _write(text, spec.out)
    return EXIT_OK


# -- simulate / validate ----------------------------------------------------

def _simulate_one(index, cfg, seed, check, engine):
    rng = np.random.default_rng([seed, index])
    x, params = random_layer_data(cfg, rng)
    t0 = time.perf_counter()
    if cfg.kind == "conv":
        res = run_conv_layer(cfg, x, params, engine, layer=index)
        model = conv_cycles(cfg, engine.mode(cfg.w_f, cfg.s))
        slack = segment_slack(cfg, engine)
    else:
        res = run_fc_layer(cfg, x, *params, engine, layer=index)
        model, slack = fc_cycles(cfg, engine), 0
    rec = res.to_record()
    rec.update(mode=(f"{cfg.h_f}x{cfg.w_f}/s{cfg.s}" if cfg.kind == "conv" else "fc"),
               model_cycles=model, seconds=round(time.perf_counter() - t0, 3))
    if check:
        if cfg.kind == "conv":
            want, sats = conv_forward(x, params, cfg, "fixed", return_saturations=True)
            exact = bool(res.output == want)
        else:
            want, sats = fc_forward(x, *params, "fixed", return_saturations=True)
            exact = bool(np.array_equal(res.output, want))
        delta = res.cycles - model
        cycles_ok = 0 <= delta <= slack
        ok = exact and cycles_ok and res.saturations == 0 and sats == 0
        rec.update(bit_exact=exact, cycle_delta=delta, cycle_slack=slack,
                   cycles_ok=cycles_ok, passed=ok)
    return rec


def _run_layers(spec: RunSpec, check: bool) -> list[dict]:
    net = resolve_network(spec.network)
    picked = parse_layers(spec.layers, len(net.layers))
    engine = EngineConfig()
    jobs = [(i, scale_layer(net.layers[i - 1], spec.scale)) for i in picked]
    workers = min(default_workers(), len(jobs)) or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda j: _simulate_one(j[0], j[1], spec.seed, check, engine), jobs))
    return [_simulate_one(i, cfg, spec.seed, check, engine) for i, cfg in jobs]


SIM_FIELDS = ["layer", "kind", "mode", "cycles", "ma_inputs", "ma_weights", "ma_outputs",
              "busy_ratio", "saturations"]
VALIDATE_FIELDS = SIM_FIELDS[:4] + ["model_cycles", "cycle_delta", "cycle_slack",
                                    "bit_exact", "saturations", "passed"]


def _emit_records(spec: RunSpec, recs: list[dict], fields: list[str], footer: str = "") -> None:
    if spec.format == "json":
        text = json.dumps(recs, indent=2) + "\n"
    elif spec.format == "csv":
        text = _csv(recs, fields)
    else:
        text = _table(recs, fields) + footer
    _write(text, spec.out)


def cmd_simulate(spec: RunSpec) -> int:
    recs = _run_layers(spec, check=False)
    for r in recs:
        r.pop("seconds", None)
    _emit_records(spec, recs, SIM_FIELDS)
    return EXIT_OK


def cmd_validate(spec: RunSpec) -> int:
    t0 = time.perf_counter()
    recs = _run_layers(spec, check=True)
    failed = [r for r in recs if not r["passed"]]
    footer = (f"{len(recs) - len(failed)}/{len(recs)} layers passed "
              f"(scale {spec.scale}, kernels: {kernels.BACKEND}, "
              f"{time.perf_counter() - t0:.1f} s)\n")
    for r in failed:
        why = []
        if not r["bit_exact"]:
            why.append("output differs from oracle")
        if not r["cycles_ok"]:
            why.append(f"cycles off by {r['cycle_delta']} (allowed 0..{r['cycle_slack']})")
        if r["saturations"]:
            why.append(f"{r['saturations']} saturations")
        footer += f"FAIL layer {r['layer']} ({r['mode']}): {'; '.join(why)}\n"
    for r in recs:
        r.pop("seconds", None)
    _emit_records(spec, recs, VALIDATE_FIELDS, footer)
    if spec.format != "text":
        sys.stderr.write(footer)
    return EXIT_FAIL if failed else EXIT_OK


# -- schedule ---------------------------------------------------------------

def cmd_schedule(w_f: int, s: int, n: int, out: str | None = None) -> int:
    if min(w_f, s, n) < 1:
        raise UsageError("w_f, s and n must be >= 1")
    sched = build_schedule(w_f, s, n)
    if sched.rows > MAX_SCHEDULE_ROWS or n > MAX_SCHEDULE_ROWS:
        raise UsageError(f"grid of {sched.rows}x{n} is too large to print")
    _write(sched.render(), out)
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfid-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scale=False):
        p.add_argument("network_pos", nargs="?", metavar="NETWORK",
                       help="built-in name (alexnet, vgg16, resnet50) or JSON descriptor path")
        p.add_argument("--network", help="same as the positional NETWORK")
        p.add_argument("--layers", help="1-based layer selection, e.g. 1-5,7")
        p.add_argument("--format", choices=["json", "csv", "text"], default="text")
        p.add_argument("--out", help="write to this file instead of stdout")
        if scale:
            p.add_argument("--scale", type=int, default=1,
                           help="divide channel counts by this factor (rounded up)")
            p.add_argument("--seed", type=int, default=0, help="seed for random operands")

    p = sub.add_parser("report", help="analytical per-layer and total performance")
    common(p)
    p.add_argument("--compare", action="store_true", help="add deltas against reference values")
    p.add_argument("--model", choices=sorted(PROFILES), default="calibrated",
                   help="cost profile (default: calibrated)")
    p = sub.add_parser("simulate", help="run the cycle-accurate engine on random operands")
    common(p, scale=True)
    p = sub.add_parser("validate", help="engine vs oracle bit-exactness and cycle checks")
    common(p, scale=True)
    p = sub.add_parser("schedule", help="print a schedule matrix")
    p.add_argument("w_f", type=int)
    p.add_argument("s", type=int)
    p.add_argument("n", type=int)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "schedule":
            return cmd_schedule(args.w_f, args.s, args.n, args.out)
        if args.network and args.network_pos and args.network != args.network_pos:
            raise UsageError("network given twice with different values")
        spec = RunSpec(
            command=args.command, network=args.network or args.network_pos,
            layers=args.layers, out=args.out, format=args.format,
            scale=getattr(args, "scale", 1), seed=getattr(args, "seed", 0),
            compare=getattr(args, "compare", False), model=getattr(args, "model", "calibrated"),
        )
        return {"report": cmd_report, "simulate": cmd_simulate,
                "validate": cmd_validate}[args.command](spec)
    except (UsageError, GfidError, OSError) as exc:
        sys.stderr.write(f"gfid-sim: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
