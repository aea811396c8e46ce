"""Pure-numpy kernel implementations, signature-compatible with the
compiled module.  Accumulation is float64 throughout, results are cast
back to float32 at the end."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def backend_name():
    return "python"


def _windows(inp: np.ndarray, k: int, delta: int) -> np.ndarray:
    """(c, oh, ow, k, k) view of the zero-padded input."""
    half = k // 2
    padded = np.pad(inp, ((0, 0), (half, half), (half, half)))
    return sliding_window_view(padded, (k, k), axis=(1, 2))[:, ::delta, ::delta]


def conv_direct_chw(inp: np.ndarray, ker: np.ndarray, delta: int) -> np.ndarray:
    win = _windows(inp, ker.shape[2], delta)
    out = np.einsum(
        "cyxij,mcij->myx", win.astype(np.float64), ker.astype(np.float64)
    )
    return out.astype(np.float32)


def conv_direct_hwc(inp: np.ndarray, ker: np.ndarray, delta: int) -> np.ndarray:
    chw = np.ascontiguousarray(inp.transpose(2, 0, 1))
    out = conv_direct_chw(chw, ker, delta)
    return np.ascontiguousarray(out.transpose(1, 2, 0))


def im2col_chw(inp: np.ndarray, k: int, delta: int) -> np.ndarray:
    win = _windows(inp, k, delta)
    c, oh, ow = win.shape[0], win.shape[1], win.shape[2]
    cols = win.transpose(0, 3, 4, 1, 2).reshape(c * k * k, oh * ow)
    return np.ascontiguousarray(cols)


def matmul_f32(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.float64) @ b.astype(np.float64)).astype(np.float32)
