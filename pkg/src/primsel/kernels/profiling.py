"""Wall-clock profiling of primitives on a concrete network.

Each applicable convolution primitive is timed on every convolution
layer's scenario, and each conversion primitive on every tensor shape
flowing through the network.  One warm-up run is discarded, then the
median of at least three sequential runs is kept, floored at 1 ns.
Inputs are uniform [-1, 1] and seeded, so only the timings vary between
runs.
"""

from __future__ import annotations

import datetime
import logging
import platform
import statistics
import time
from typing import Callable

import numpy as np

from ..model import (
    CostTable,
    CostTableMeta,
    NetworkGraph,
    Registry,
    TensorShape,
    applicable_primitives,
)
from . import library
from .tensors import random_kernel, random_tensor

logger = logging.getLogger(__name__)

DEFAULT_REPS = 5


def _time_ns(fn: Callable[[], object], reps: int) -> int:
    fn()
    samples = []
    for _ in range(max(3, reps)):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    med = statistics.median_low(samples)
    if med < 1:
        logger.warning("measured under 1 ns; clamping to the 1 ns floor")
        med = 1
    return med


def profile(
    net: NetworkGraph,
    registry: Registry,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    timestamp: bool = False,
    backend: str | None = None,
) -> CostTable:
    rng = np.random.default_rng(seed)
    node_costs: dict[tuple[str, str], int] = {}
    for layer in net.convolution_layers():
        s = layer.scenario
        convs = [p for p in registry if not p.is_conversion]
        for p in applicable_primitives(s, convs):
            if p.id not in library.CONV_IMPLS:
                logger.warning(
                    "primitive %s has no executable body; leaving it unprofiled",
                    p.id,
                )
                continue
            t = random_tensor(s.input_shape, p.l_in, rng)
            ker = random_kernel(s.m, s.c, s.k, rng)
            node_costs[(layer.id, p.id)] = _time_ns(
                lambda: library.run_convolution(p, t, ker, s.delta, backend), reps
            )
    conversion_costs: dict[tuple[str, TensorShape], int] = {}
    shapes = sorted(net.edge_shapes(), key=lambda sh: (sh.c, sh.h, sh.w))
    for p in registry:
        if not p.is_conversion:
            continue
        for shape in shapes:
            t = random_tensor(shape, p.l_in, rng)
            conversion_costs[(p.id, shape)] = _time_ns(
                lambda: library.run_conversion(p, t), reps
            )
    stamp = ""
    if timestamp:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    meta = CostTableMeta(platform=platform.platform(), threads=1, timestamp=stamp)
    return CostTable(node_costs, conversion_costs, meta)
