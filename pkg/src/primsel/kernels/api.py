"""Kernel entry points with backend dispatch.

The compiled extension is preferred when importable; set
PRIMSEL_KERNEL_BACKEND=python or =compiled to force one, or pass
``backend=`` explicitly.  Both backends implement the same math: centred
zero padding, stride delta, float64 accumulation.
"""

from __future__ import annotations

import math
import os

import numpy as np

from ..model import DataFormat, Scenario, TensorShape
from . import _fallback
from .tensors import Tensor3

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

HAVE_COMPILED = _compiled is not None

_ENV_VAR = "PRIMSEL_KERNEL_BACKEND"


def active_backend(backend: str | None = None) -> str:
    """Resolve 'compiled' or 'python', honoring the override chain."""
    req = backend if backend is not None else os.environ.get(_ENV_VAR, "auto")
    req = req.strip().lower()
    if req in ("", "auto"):
        return "compiled" if HAVE_COMPILED else "python"
    if req == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "the compiled kernel backend was requested but is not built"
            )
        return "compiled"
    if req == "python":
        return "python"
    raise RuntimeError(f"unknown kernel backend {req!r}")


def _module(backend: str | None):
    return _compiled if active_backend(backend) == "compiled" else _fallback


def output_hw(h: int, w: int, delta: int) -> tuple[int, int]:
    return math.ceil(h / delta), math.ceil(w / delta)


def _check_args(t: Tensor3, kernel: np.ndarray, delta: int) -> np.ndarray:
    if kernel.ndim != 4:
        raise ValueError(f"kernel must be 4-D (m, c, k, k), got {kernel.ndim}-D")
    m, c, kh, kw = kernel.shape
    if kh != kw:
        raise ValueError(f"kernel window must be square, got {kh}x{kw}")
    if kh % 2 != 1:
        raise ValueError(f"kernel size must be odd, got {kh}")
    if c != t.shape.c:
        raise ValueError(
            f"kernel expects {c} input channels, tensor has {t.shape.c}"
        )
    if delta < 1:
        raise ValueError(f"stride must be positive, got {delta}")
    return np.ascontiguousarray(kernel, dtype=np.float32)


def conv_direct(
    t: Tensor3, kernel: np.ndarray, delta: int, backend: str | None = None
) -> Tensor3:
    """Direct-loop convolution; works natively on chw or hwc tensors."""
    kernel = _check_args(t, kernel, delta)
    mod = _module(backend)
    if t.fmt.layout == "chw":
        out = mod.conv_direct_chw(np.ascontiguousarray(t.data), kernel, delta)
        return Tensor3(out, DataFormat("chw", t.fmt.element_type))
    if t.fmt.layout == "hwc":
        out = mod.conv_direct_hwc(np.ascontiguousarray(t.data), kernel, delta)
        return Tensor3(out, DataFormat("hwc", t.fmt.element_type))
    raise ValueError(f"direct convolution supports chw or hwc, not {t.fmt.layout}")


def conv_im2col(
    t: Tensor3, kernel: np.ndarray, delta: int, backend: str | None = None
) -> Tensor3:
    """Patch-matrix convolution: im2col followed by a plain matrix product."""
    kernel = _check_args(t, kernel, delta)
    if t.fmt.layout != "chw":
        raise ValueError(f"im2col convolution expects a chw tensor, not {t.fmt.layout}")
    mod = _module(backend)
    m, _, k, _ = kernel.shape
    cols = mod.im2col_chw(np.ascontiguousarray(t.data), k, delta)
    flat = np.ascontiguousarray(kernel.reshape(m, -1))
    prod = mod.matmul_f32(flat, cols)
    oh, ow = output_hw(t.shape.h, t.shape.w, delta)
    return Tensor3(
        np.ascontiguousarray(prod.reshape(m, oh, ow)),
        DataFormat("chw", t.fmt.element_type),
    )


def conv_sum2d(
    t: Tensor3, kernel: np.ndarray, delta: int, backend: str | None = None
) -> Tensor3:
    """Reference implementation: one 2-D convolution per channel pair, summed.

    Deliberately the slowest path; it exists as the universally applicable
    fallback every other implementation is measured against.
    """
    kernel = _check_args(t, kernel, delta)
    if t.fmt.layout != "chw":
        raise ValueError(f"the reference convolution expects chw, not {t.fmt.layout}")
    mod = _module(backend)
    data = np.ascontiguousarray(t.data)
    m, c = kernel.shape[0], kernel.shape[1]
    oh, ow = output_hw(t.shape.h, t.shape.w, delta)
    acc = np.zeros((m, oh, ow), dtype=np.float64)
    for om in range(m):
        for ch in range(c):
            one = mod.conv_direct_chw(
                data[ch : ch + 1], kernel[om : om + 1, ch : ch + 1], delta
            )
            acc[om] += one[0].astype(np.float64)
    return Tensor3(acc.astype(np.float32), DataFormat("chw", t.fmt.element_type))


def scenario_kernel_shape(s: Scenario) -> tuple[int, int, int, int]:
    return (s.m, s.c, s.k, s.k)


def scenario_output(s: Scenario) -> TensorShape:
    oh, ow = output_hw(s.h, s.w, s.delta)
    return TensorShape(s.m, oh, ow)
