"""Compiled vs numpy kernels on the per-cycle inner loop.

    python benchmarks/bench_kernels.py [--repeat 3]

Runs one engine layer per mode with each backend and prints wall time and
the speedup. Both backends must produce identical SimResult records.
"""
import argparse
import time

import numpy as np

from gfid_sim import ConvLayerConfig, FilterBank, Tensor3, _kernels_py, kernels, run_conv_layer

try:
    from gfid_sim import _kernels as compiled
except ImportError:
    compiled = None

LAYERS = {
    "1x1/s1": ConvLayerConfig(16, 16, 16, 1, 1, 1, 192),
    "3x3/s1": ConvLayerConfig(18, 18, 8, 3, 3, 1, 64),
    "5x5/s1": ConvLayerConfig(20, 20, 8, 5, 5, 1, 32),
    "7x7/s2": ConvLayerConfig(37, 37, 3, 7, 7, 2, 32),
    "11x11/s4": ConvLayerConfig(71, 71, 3, 11, 11, 4, 64),
}


def operands(cfg, rng):
    x = Tensor3(rng.integers(-200, 200, (cfg.c_in, cfg.h_in, cfg.w_in), dtype=np.int16))
    w = FilterBank(rng.integers(-4000, 4000, (cfg.h_f, cfg.w_f, cfg.c_in, cfg.c_out), dtype=np.int16),
                   np.zeros(cfg.c_out, np.int16))
    return x, w


def use(backend):
    kernels.conv_row_pass = backend.conv_row_pass
    kernels.fc_pass = backend.fc_pass


def timed(cfg, x, w, repeat):
    best, res = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = run_conv_layer(cfg, x, w)
        best = min(best, time.perf_counter() - t0)
    return best, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled kernels are not built; reinstall with Cython available")
    rng = np.random.default_rng(0)
    print(f"{'mode':>9} {'cycles':>9} {'cython s':>9} {'numpy s':>9} {'speedup':>8}")
    for name, cfg in LAYERS.items():
        x, w = operands(cfg, rng)
        use(compiled)
        tc, rc = timed(cfg, x, w, args.repeat)
        use(_kernels_py)
        tp, rp = timed(cfg, x, w, 1)
        assert rc.to_record() == rp.to_record() and rc.output == rp.output
        print(f"{name:>9} {rc.cycles:>9} {tc:>9.4f} {tp:>9.3f} {tp / tc:>7.0f}x")
    use(compiled)


if __name__ == "__main__":
    main()
