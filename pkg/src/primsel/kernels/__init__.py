"""Executable kernels: tensor containers, convolution implementations in a
compiled and a pure-python backend, the builtin primitive library, and
wall-clock profiling."""

from .api import (
    HAVE_COMPILED,
    active_backend,
    conv_direct,
    conv_im2col,
    conv_sum2d,
    output_hw,
)
from .library import (
    CONV_IMPLS,
    REFERENCE_ID,
    builtin_registry,
    run_conversion,
    run_convolution,
)
from .profiling import DEFAULT_REPS, profile
from .tensors import (
    Tensor3,
    random_kernel,
    random_tensor,
    tensor_from_chw,
    to_chw,
    transform_layout,
)

__all__ = [
    "HAVE_COMPILED",
    "active_backend",
    "conv_direct",
    "conv_im2col",
    "conv_sum2d",
    "output_hw",
    "CONV_IMPLS",
    "REFERENCE_ID",
    "builtin_registry",
    "run_conversion",
    "run_convolution",
    "DEFAULT_REPS",
    "profile",
    "Tensor3",
    "random_kernel",
    "random_tensor",
    "tensor_from_chw",
    "to_chw",
    "transform_layout",
]
