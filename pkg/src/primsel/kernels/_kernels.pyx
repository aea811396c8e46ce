# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels.

Inputs are C-contiguous float32 arrays; accumulation is double precision.
Padding is implicit zero padding centred on the kernel, so an H x W input
with stride delta yields ceil(H/delta) x ceil(W/delta) outputs.  Argument
validation happens in the python wrappers, not here.
"""

import numpy as np


def backend_name():
    return "compiled"


def conv_direct_chw(float[:, :, ::1] inp, float[:, :, :, ::1] ker, int delta):
    cdef Py_ssize_t c = inp.shape[0], h = inp.shape[1], w = inp.shape[2]
    cdef Py_ssize_t m = ker.shape[0], k = ker.shape[2]
    cdef Py_ssize_t oh = (h + delta - 1) // delta
    cdef Py_ssize_t ow = (w + delta - 1) // delta
    cdef Py_ssize_t half = k // 2
    out_np = np.zeros((m, oh, ow), dtype=np.float32)
    cdef float[:, :, ::1] out = out_np
    cdef Py_ssize_t om, y, x, ch, i, j, yy, xx
    cdef double acc
    for om in range(m):
        for y in range(oh):
            for x in range(ow):
                acc = 0.0
                for ch in range(c):
                    for i in range(k):
                        yy = delta * y + i - half
                        if yy < 0 or yy >= h:
                            continue
                        for j in range(k):
                            xx = delta * x + j - half
                            if xx < 0 or xx >= w:
                                continue
                            acc += inp[ch, yy, xx] * ker[om, ch, i, j]
                out[om, y, x] = <float> acc
    return out_np


def conv_direct_hwc(float[:, :, ::1] inp, float[:, :, :, ::1] ker, int delta):
    cdef Py_ssize_t h = inp.shape[0], w = inp.shape[1], c = inp.shape[2]
    cdef Py_ssize_t m = ker.shape[0], k = ker.shape[2]
    cdef Py_ssize_t oh = (h + delta - 1) // delta
    cdef Py_ssize_t ow = (w + delta - 1) // delta
    cdef Py_ssize_t half = k // 2
    out_np = np.zeros((oh, ow, m), dtype=np.float32)
    cdef float[:, :, ::1] out = out_np
    cdef Py_ssize_t om, y, x, ch, i, j, yy, xx
    cdef double acc
    for y in range(oh):
        for x in range(ow):
            for om in range(m):
                acc = 0.0
                for i in range(k):
                    yy = delta * y + i - half
                    if yy < 0 or yy >= h:
                        continue
                    for j in range(k):
                        xx = delta * x + j - half
                        if xx < 0 or xx >= w:
                            continue
                        for ch in range(c):
                            acc += inp[yy, xx, ch] * ker[om, ch, i, j]
                out[y, x, om] = <float> acc
    return out_np


def im2col_chw(float[:, :, ::1] inp, int k, int delta):
    """Patch matrix of shape (c*k*k, oh*ow); rows ordered (channel, ky, kx)."""
    cdef Py_ssize_t c = inp.shape[0], h = inp.shape[1], w = inp.shape[2]
    cdef Py_ssize_t oh = (h + delta - 1) // delta
    cdef Py_ssize_t ow = (w + delta - 1) // delta
    cdef Py_ssize_t half = k // 2
    out_np = np.zeros((c * k * k, oh * ow), dtype=np.float32)
    cdef float[:, ::1] out = out_np
    cdef Py_ssize_t ch, i, j, y, x, yy, xx, row
    for ch in range(c):
        for i in range(k):
            for j in range(k):
                row = (ch * k + i) * k + j
                for y in range(oh):
                    yy = delta * y + i - half
                    if yy < 0 or yy >= h:
                        continue
                    for x in range(ow):
                        xx = delta * x + j - half
                        if 0 <= xx < w:
                            out[row, y * ow + x] = inp[ch, yy, xx]
    return out_np


def matmul_f32(float[:, ::1] a, float[:, ::1] b):
    cdef Py_ssize_t rows = a.shape[0], inner = a.shape[1], cols = b.shape[1]
    out_np = np.zeros((rows, cols), dtype=np.float32)
    cdef float[:, ::1] out = out_np
    cdef Py_ssize_t i, j, p
    cdef double acc
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for p in range(inner):
                acc += a[i, p] * b[p, j]
            out[i, j] = <float> acc
    return out_np
