"""The builtin primitive library: registry entries plus executable bodies.

Four convolution implementations across three families, and the two
layout converters between chw and hwc.  The patch-matrix family is
marked inapplicable to strided layers; everything else is unrestricted.
"""

from __future__ import annotations

from ..fileio import InputError
from ..model import (
    CONVERSION_FAMILY,
    Constraint,
    DataFormat,
    Primitive,
    Registry,
)
from . import api
from .tensors import Tensor3, transform_layout

REFERENCE_ID = "conv_sum2d_chw"

_CHW = DataFormat("chw")
_HWC = DataFormat("hwc")


def builtin_registry() -> Registry:
    prims = (
        Primitive(REFERENCE_ID, "sum2d", _CHW, _CHW),
        Primitive("conv_direct_chw", "direct", _CHW, _CHW),
        Primitive("conv_direct_hwc", "direct", _HWC, _HWC),
        Primitive(
            "conv_im2col_chw",
            "im2col",
            _CHW,
            _CHW,
            (Constraint("delta", "eq", 1),),
        ),
        Primitive("cvt_chw_hwc", CONVERSION_FAMILY, _CHW, _HWC),
        Primitive("cvt_hwc_chw", CONVERSION_FAMILY, _HWC, _CHW),
    )
    return Registry(
        prims, canonical_format=_CHW, reference_primitive=REFERENCE_ID
    )


CONV_IMPLS = {
    REFERENCE_ID: api.conv_sum2d,
    "conv_direct_chw": api.conv_direct,
    "conv_direct_hwc": api.conv_direct,
    "conv_im2col_chw": api.conv_im2col,
}


def run_convolution(
    prim: Primitive, t: Tensor3, kernel, delta: int, backend: str | None = None
) -> Tensor3:
    impl = CONV_IMPLS.get(prim.id)
    if impl is None:
        raise InputError(f"no executable implementation for primitive {prim.id!r}")
    if t.fmt != prim.l_in:
        raise ValueError(
            f"primitive {prim.id} consumes {prim.l_in}, tensor is {t.fmt}"
        )
    out = impl(t, kernel, delta, backend=backend)
    if out.fmt != prim.l_out:
        raise ValueError(
            f"primitive {prim.id} produced {out.fmt}, declared {prim.l_out}"
        )
    return out


def run_conversion(prim: Primitive, t: Tensor3) -> Tensor3:
    """Any conversion primitive executes as a layout permutation."""
    if not prim.is_conversion:
        raise ValueError(f"primitive {prim.id} is not a conversion")
    if t.fmt != prim.l_in:
        raise ValueError(
            f"conversion {prim.id} consumes {prim.l_in}, tensor is {t.fmt}"
        )
    return transform_layout(t, prim.l_out)
