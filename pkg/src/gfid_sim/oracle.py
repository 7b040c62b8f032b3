"""Naive reference convolution and fully-connected layers.

Fixed-point mode accumulates every output in the canonical order: input
channel k, then filter row j, then filter column i, starting from the bias.
Each step is one saturating 24-bit mac. The loops run over (k, j, i) and
each step updates all output pixels at once.
"""
from __future__ import annotations

from typing import Literal

import numpy as np

from .errors import ShapeError
from .fixedpoint import mac_array, requantize_relu
from .layers import ConvLayerConfig, FilterBank, Tensor3, check_input

Arith = Literal["real", "fixed"]


def _window(x: np.ndarray, cfg: ConvLayerConfig, k: int, j: int, i: int) -> np.ndarray:
    """Input pixels X(k, z*s + j, t*s + i) for every output position (z, t)."""
    s = cfg.s
    return x[k, j:j + s * (cfg.h_out - 1) + 1:s, i:i + s * (cfg.w_out - 1) + 1:s]


def conv_forward(x: Tensor3, w: FilterBank, cfg: ConvLayerConfig, arith: Arith = "fixed",
                 return_saturations: bool = False):
    """Y(z,t,q) = ReLU(B(q) + sum_k sum_j sum_i X(k, sz+j, st+i) W(j,i,k,q))."""
    check_input(x, cfg)
    w.check(cfg)
    xs = x.data
    co_g, ci_g = cfg.c_out_per_group, cfg.c_in_per_group
    shape = (cfg.c_out, cfg.h_out, cfg.w_out)
    saturations = 0
    if arith == "real":
        acc = np.broadcast_to(np.asarray(w.biases, dtype=np.float64)[:, None, None], shape).copy()
    elif arith == "fixed":
        acc = np.broadcast_to(np.asarray(w.biases, dtype=np.int64)[:, None, None], shape).copy()
    else:
        raise ValueError(f"unknown arithmetic {arith!r}")
    for g in range(cfg.groups):
        q = slice(g * co_g, (g + 1) * co_g)
        for k in range(ci_g):
            for j in range(cfg.h_f):
                for i in range(cfg.w_f):
                    px = _window(xs, cfg, g * ci_g + k, j, i)[None, :, :]
                    wt = w.filters[j, i, k, q][:, None, None]
                    if arith == "real":
                        acc[q] += px * wt
                    else:
                        acc[q], n = mac_array(acc[q], px, wt)
                        saturations += n
    out = np.maximum(acc, 0.0) if arith == "real" else requantize_relu(acc)
    y = Tensor3(out)
    return (y, saturations) if return_saturations else y


def fc_forward(x, w, b, arith: Arith = "fixed", return_saturations: bool = False):
    """y = ReLU(w @ x + b); fixed mode accumulates j = 0..n-1 in order."""
    x = np.asarray(x)
    w = np.asarray(w)
    b = np.asarray(b)
    if w.ndim != 2 or x.shape != (w.shape[1],) or b.shape != (w.shape[0],):
        raise ShapeError(f"fc shapes disagree: w {w.shape}, x {x.shape}, b {b.shape}")
    saturations = 0
    if arith == "real":
        y = np.maximum(w.astype(np.float64) @ x.astype(np.float64) + b, 0.0)
    elif arith == "fixed":
        acc = b.astype(np.int64)
        for j in range(w.shape[1]):
            acc, n = mac_array(acc, x[j], w[:, j])
            saturations += n
        y = requantize_relu(acc)
    else:
        raise ValueError(f"unknown arithmetic {arith!r}")
    return (y, saturations) if return_saturations else y
