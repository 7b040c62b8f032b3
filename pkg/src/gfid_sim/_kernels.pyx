# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cycle loops; see _kernels_py for the reference semantics."""
from libc.stdint cimport int64_t

cdef int64_t ACC_MAX = (1 << 23) - 1
cdef int64_t ACC_MIN = -(1 << 23)


cdef inline int64_t _asr15(int64_t p) noexcept nogil:
    # Floor division by 2**15 without relying on signed-shift behaviour.
    if p >= 0:
        return p >> 15
    return -(((-p) - 1) >> 15) - 1


cdef inline int64_t _sat(int64_t v, int64_t* count) noexcept nogil:
    if v > ACC_MAX:
        count[0] += 1
        return ACC_MAX
    if v < ACC_MIN:
        count[0] += 1
        return ACC_MIN
    return v


def conv_row_pass(const int64_t[::1] pixels, const int64_t[:, ::1] weights,
                  int64_t[:, :, ::1] acc, Py_ssize_t s, Py_ssize_t t_group,
                  Py_ssize_t g0, Py_ssize_t n, int64_t[::1] busy):
    cdef Py_ssize_t w_f = weights.shape[0]
    cdef Py_ssize_t lanes = weights.shape[1]
    cdef Py_ssize_t cycles = pixels.shape[0]
    cdef Py_ssize_t ring = s * t_group
    cdef Py_ssize_t c, q, lane, first, d, i, u, slot
    cdef int64_t px
    cdef int64_t saturations = 0
    with nogil:
        for c in range(cycles):
            px = pixels[c]
            for q in range(t_group):
                first = ((q - g0) % t_group + t_group) % t_group
                d = c - s * first
                if d < 0:
                    continue
                i = d % ring
                if i >= w_f:
                    continue
                u = first + t_group * (d / ring)
                if u >= n:
                    continue
                slot = (g0 + u) / t_group
                busy[q] += 1
                for lane in range(lanes):
                    acc[q, slot, lane] = _sat(
                        acc[q, slot, lane] + _asr15(px * weights[i, lane]), &saturations)
    return saturations


def fc_pass(const int64_t[::1] x, const int64_t[:, ::1] weights, int64_t[::1] acc):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t lanes = weights.shape[1]
    cdef Py_ssize_t j, lane
    cdef int64_t px
    cdef int64_t saturations = 0
    with nogil:
        for j in range(n):
            px = x[j]
            for lane in range(lanes):
                acc[lane] = _sat(acc[lane] + _asr15(px * weights[j, lane]), &saturations)
    return saturations
