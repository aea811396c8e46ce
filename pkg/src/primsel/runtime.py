"""Execute a legalized plan with the builtin kernels.

Inputs and convolution weights are seeded random tensors, so repeated
runs of the same plan compute the same values; only the timings differ.
Weights are derived per layer id, independent of plan step order.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass

import numpy as np

from .fileio import InputError
from .kernels import library
from .kernels.tensors import Tensor3, random_kernel, random_tensor, to_chw
from .legalize import ExecutionPlan, validate_plan
from .model import NetworkGraph, Primitive, Registry


@dataclass(frozen=True)
class StepTiming:
    step_id: str
    predicted: int
    actual: int


@dataclass(frozen=True)
class RunResult:
    timings: tuple[StepTiming, ...]
    outputs: dict[str, np.ndarray]
    total_predicted: int
    total_actual: int


def _layer_rng(seed: int, layer_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(layer_id.encode())])


def _prim(registry: Registry, step) -> Primitive:
    if step.primitive_id is None:
        raise InputError(f"step {step.id} names no primitive but must execute one")
    try:
        return registry.get(step.primitive_id)
    except KeyError:
        raise InputError(
            f"step {step.id} uses unknown primitive {step.primitive_id!r}"
        ) from None


def execute_plan(
    plan: ExecutionPlan,
    net: NetworkGraph,
    registry: Registry,
    seed: int = 0,
    backend: str | None = None,
) -> RunResult:
    violations = validate_plan(plan, net)
    if violations:
        raise InputError("plan does not validate: " + "; ".join(violations))
    layer_ids = {n.id for n in net.nodes}
    produced: dict[str, Tensor3] = {}
    timings: list[StepTiming] = []
    outputs: dict[str, np.ndarray] = {}
    for step in plan.steps:
        feeds = [e.producer for e in plan.edges if e.consumer == step.id]
        args = [produced[p] for p in feeds]
        layer = net.layer(step.id) if step.id in layer_ids else None
        t0 = time.perf_counter_ns()
        if layer is not None and layer.kind == "input":
            out = random_tensor(step.shape, step.output_format, _layer_rng(seed, step.id))
        elif layer is not None and layer.kind == "convolution":
            (src,) = args
            s = layer.scenario
            ker = random_kernel(s.m, s.c, s.k, _layer_rng(seed, step.id))
            out = library.run_convolution(_prim(registry, step), src, ker, s.delta, backend)
        elif layer is not None and layer.kind == "output":
            (out,) = args
            outputs[step.id] = to_chw(out)
        elif layer is not None:  # passthrough forwards its tensor unchanged
            out = args[0]
        else:  # inserted conversion step
            (src,) = args
            out = library.run_conversion(_prim(registry, step), src)
        actual = time.perf_counter_ns() - t0
        if (layer is None or layer.kind != "output") and out.fmt != step.output_format:
            raise InputError(
                f"step {step.id} produced format {out.fmt}, planned {step.output_format}"
            )
        produced[step.id] = out
        timings.append(StepTiming(step.id, step.predicted, max(1, actual)))
    return RunResult(
        timings=tuple(timings),
        outputs=outputs,
        total_predicted=plan.total_predicted,
        total_actual=sum(t.actual for t in timings),
    )
