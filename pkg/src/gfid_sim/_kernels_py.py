"""Pure-Python/numpy kernels; same API and results as the compiled ones.

Layouts: ``weights[i, lane]``, ``acc[pe, slot, lane]``, ``fc weights[j, lane]``.
"""
import numpy as np

from .fixedpoint import ACC_MAX, ACC_MIN, PRODUCT_SHIFT


def conv_row_pass(pixels, weights, acc, s, t_group, g0, n, busy):
    """Run one row piece cycle by cycle; returns the saturation count.

    Output ``g0 + u`` of the segment lives on PE ``(g0 + u) % t_group`` in
    slot ``(g0 + u) // t_group`` and sees weight ``i = c - s*u`` at cycle c.
    """
    w_f = weights.shape[0]
    ring = s * t_group
    pe = np.arange(t_group)
    first = (pe - g0) % t_group  # local index of each PE's first output
    saturations = 0
    for c in range(pixels.shape[0]):
        d = c - s * first
        i = d % ring
        u = first + t_group * (d // ring)
        ok = (d >= 0) & (i < w_f) & (u < n)
        if not ok.any():
            continue
        q = pe[ok]
        slot = (g0 + u[ok]) // t_group
        wide = acc[q, slot, :] + ((int(pixels[c]) * weights[i[ok], :]) >> PRODUCT_SHIFT)
        new = np.clip(wide, ACC_MIN, ACC_MAX)
        saturations += int(np.count_nonzero(new != wide))
        acc[q, slot, :] = new
        busy[q] += 1
    return saturations


def fc_pass(x, weights, acc):
    """One weight column per cycle into every lane's accumulator."""
    saturations = 0
    for j in range(x.shape[0]):
        wide = acc + ((int(x[j]) * weights[j, :]) >> PRODUCT_SHIFT)
        np.clip(wide, ACC_MIN, ACC_MAX, out=acc)
        saturations += int(np.count_nonzero(acc != wide))
    return saturations
