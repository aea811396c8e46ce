"""Tensor containers carrying an explicit data format.

A Tensor3 stores its numpy array with axes physically ordered per its
layout string, so a layout change is a real transpose-and-copy, not a
relabeling.  Transforms are value-preserving bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import LAYOUTS, DataFormat, TensorShape


@dataclass(frozen=True)
class Tensor3:
    data: np.ndarray
    fmt: DataFormat

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError(f"expected a 3-D array, got {self.data.ndim}-D")
        if self.data.dtype != np.float32:
            raise ValueError(f"expected float32 data, got {self.data.dtype}")
        if self.fmt.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.fmt.layout!r}")
        if self.fmt.element_type != "fp32":
            raise ValueError("only fp32 tensors are executable")

    @property
    def shape(self) -> TensorShape:
        sizes = dict(zip(self.fmt.layout, self.data.shape))
        return TensorShape(sizes["c"], sizes["h"], sizes["w"])

    def axis(self, dim: str) -> int:
        return self.fmt.layout.index(dim)


def transform_layout(t: Tensor3, target) -> Tensor3:
    """Permute to ``target`` layout (a string or a DataFormat)."""
    if isinstance(target, DataFormat):
        layout, element_type = target.layout, target.element_type
    else:
        layout, element_type = target, t.fmt.element_type
    if element_type != t.fmt.element_type:
        raise ValueError("layout transforms do not change the element type")
    perm = tuple(t.fmt.layout.index(d) for d in layout)
    data = np.ascontiguousarray(np.transpose(t.data, perm))
    return Tensor3(data, DataFormat(layout, element_type))


def tensor_from_chw(arr: np.ndarray, fmt: DataFormat) -> Tensor3:
    base = Tensor3(np.ascontiguousarray(arr, dtype=np.float32), DataFormat("chw", fmt.element_type))
    return transform_layout(base, fmt)


def to_chw(t: Tensor3) -> np.ndarray:
    return transform_layout(t, "chw").data


def random_tensor(shape: TensorShape, fmt: DataFormat, rng: np.random.Generator) -> Tensor3:
    """Uniform [-1, 1] values; the logical tensor depends only on the rng
    state, not on the requested layout."""
    vals = rng.uniform(-1.0, 1.0, size=(shape.c, shape.h, shape.w)).astype(np.float32)
    return tensor_from_chw(vals, fmt)


def random_kernel(m: int, c: int, k: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(m, c, k, k)).astype(np.float32)
