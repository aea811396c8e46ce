"""Turn a network, a primitive registry and a cost table into a selection problem.

Each layer becomes a node whose choices are its viable implementations:
applicable profiled primitives for convolutions, one zero-cost choice per
data format for passthrough layers, and a single choice pinned to the
canonical format for network inputs and outputs.  Each dataflow edge
becomes a matrix of least conversion-chain costs between the producer's
output format and the consumer's input format, priced for that edge's
tensor shape.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

from .cost import INFINITE, Cost, is_finite
from .dtgraph import ApspTable, build_dt_graph
from .fileio import InputError
from .model import (
    CostTable,
    DataFormat,
    NetworkGraph,
    Registry,
    TensorShape,
    applicable_primitives,
)
from .pbqp import (
    DEFAULT_EXHAUSTIVE_BOUND,
    PbqpInstance,
    PbqpSolution,
    SolverInternalError,
    solve,
)

logger = logging.getLogger(__name__)

DEFAULT_CANONICAL = DataFormat("chw", "fp32")


class InfeasibleError(Exception):
    """No valid implementation assignment exists; the CLI maps this to exit 3."""


@dataclass(frozen=True)
class Alternative:
    """One selectable implementation of a layer.

    Dummy choices (passthrough formats, pinned boundary formats) carry no
    primitive and zero cost.  A missing input format marks a network
    input; a missing output format marks a network output.
    """

    primitive_id: str | None
    input_format: DataFormat | None
    output_format: DataFormat | None
    cost: int


@dataclass(frozen=True)
class SelectionProblem:
    net: NetworkGraph
    registry: Registry
    tables: Mapping[TensorShape, ApspTable]
    canonical: DataFormat
    node_order: tuple[str, ...]
    alternatives: Mapping[str, tuple[Alternative, ...]]
    instance: PbqpInstance


@dataclass(frozen=True)
class Selection:
    """A concrete implementation per layer plus its predicted runtime."""

    assignments: Mapping[str, Alternative]
    predicted_total: Cost
    optimality: str

    @property
    def feasible(self) -> bool:
        return is_finite(self.predicted_total)


def _validate_for_selection(net: NetworkGraph) -> None:
    for node in net.nodes:
        ins = net.in_edges(node.id)
        outs = net.out_edges(node.id)
        if node.kind == "input" and ins:
            raise InputError(f"input layer {node.id} must not consume an edge")
        if node.kind == "output" and outs:
            raise InputError(f"output layer {node.id} must not produce an edge")
        if node.kind != "input" and not ins:
            raise InputError(f"{node.kind} layer {node.id} has no incoming edge")
        if len({e.shape for e in outs}) > 1:
            raise InputError(f"layer {node.id} produces edges with differing shapes")
        if node.kind == "passthrough" and outs:
            in_shapes = {e.shape for e in ins}
            if in_shapes != {outs[0].shape}:
                raise InputError(
                    f"passthrough layer {node.id} must forward its input shape unchanged"
                )


def _conv_alternatives(
    layer, registry: Registry, costs: CostTable, restrict: Mapping[str, str] | None
) -> tuple[Alternative, ...]:
    prims = applicable_primitives(
        layer.scenario, [p for p in registry if not p.is_conversion]
    )
    if restrict is not None and layer.id in restrict:
        wanted = restrict[layer.id]
        prims = [p for p in prims if p.id == wanted]
        if not prims:
            raise InfeasibleError(
                f"layer {layer.id}: primitive {wanted!r} is not applicable"
            )
    alts = []
    for p in prims:
        ns = costs.node_cost(layer.id, p.id)
        if ns is None:
            logger.warning(
                "no profiled cost for %s on layer %s; dropping that option",
                p.id,
                layer.id,
            )
            continue
        alts.append(Alternative(p.id, p.l_in, p.l_out, ns))
    if not alts:
        raise InfeasibleError(
            f"layer {layer.id} has no applicable implementation with a profiled cost"
        )
    return tuple(alts)


def _dist(table: ApspTable, src: DataFormat, dst: DataFormat) -> Cost:
    try:
        return table.cost_between(src, dst)
    except KeyError:
        return 0 if src == dst else INFINITE


def build_problem(
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    canonical: DataFormat | None = None,
    restrict: Mapping[str, str] | None = None,
) -> SelectionProblem:
    """Assemble the PBQP form of the selection problem.

    ``restrict`` freezes named convolution layers to one primitive each,
    which is how baselines reuse the same machinery: dummy layers stay
    free, so their formats still get completed optimally.
    """
    _validate_for_selection(net)
    if canonical is None:
        canonical = registry.canonical_format or DEFAULT_CANONICAL
    if tables:
        formats = next(iter(tables.values())).formats
    else:
        formats = build_dt_graph(registry).formats
    node_order = tuple(net.topological_order())
    pos = {nid: i for i, nid in enumerate(node_order)}
    alternatives: dict[str, tuple[Alternative, ...]] = {}
    for nid in node_order:
        layer = net.layer(nid)
        if layer.kind == "convolution":
            alternatives[nid] = _conv_alternatives(layer, registry, costs, restrict)
        elif layer.kind == "passthrough":
            alternatives[nid] = tuple(Alternative(None, f, f, 0) for f in formats)
        elif layer.kind == "input":
            alternatives[nid] = (Alternative(None, None, canonical, 0),)
        else:
            alternatives[nid] = (Alternative(None, canonical, None, 0),)
    vectors = [[alt.cost for alt in alternatives[nid]] for nid in node_order]
    edges = []
    for e in net.edges:
        table = tables.get(e.shape)
        if table is None:
            raise InputError(f"no conversion table for shape {e.shape.key}")
        rows = [
            [
                _dist(table, alt_a.output_format, alt_b.input_format)
                for alt_b in alternatives[e.consumer]
            ]
            for alt_a in alternatives[e.producer]
        ]
        edges.append((pos[e.producer], pos[e.consumer], rows))
    instance = PbqpInstance.build(vectors, edges)
    return SelectionProblem(
        net=net,
        registry=registry,
        tables=tables,
        canonical=canonical,
        node_order=node_order,
        alternatives=alternatives,
        instance=instance,
    )


def evaluate_selection(
    problem: SelectionProblem, assignments: Mapping[str, "Alternative"]
) -> Cost:
    """Re-sum a selection: node costs plus per-edge conversion-chain costs."""
    total: Cost = 0
    for nid in problem.node_order:
        total = total + assignments[nid].cost
    for e in problem.net.edges:
        table = problem.tables[e.shape]
        total = total + _dist(
            table,
            assignments[e.producer].output_format,
            assignments[e.consumer].input_format,
        )
    return total


def map_solution(problem: SelectionProblem, sol: PbqpSolution) -> Selection:
    assignments = {
        nid: problem.alternatives[nid][sol.choice[i]]
        for i, nid in enumerate(problem.node_order)
    }
    recomputed = evaluate_selection(problem, assignments)
    if recomputed != sol.objective:
        raise SolverInternalError(
            f"selection re-sum {recomputed} does not match objective {sol.objective}"
        )
    return Selection(assignments, sol.objective, sol.optimality)


def select_optimal(
    problem: SelectionProblem, bound: int | None = DEFAULT_EXHAUSTIVE_BOUND
) -> Selection:
    return map_solution(problem, solve(problem.instance, bound))


def complete_with_fixed(
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    fixed: Mapping[str, str],
    canonical: DataFormat | None = None,
    bound: int | None = DEFAULT_EXHAUSTIVE_BOUND,
) -> Selection:
    """Freeze every convolution to ``fixed[layer]`` and solve for the rest.

    Dummy layers still take whatever formats minimize the conversion
    overhead, so a baseline is never penalized for poor dummy placement.
    """
    problem = build_problem(
        net, registry, costs, tables, canonical=canonical, restrict=fixed
    )
    return select_optimal(problem, bound)


def baseline_greedy(
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    canonical: DataFormat | None = None,
) -> Selection:
    """Cheapest primitive per layer in isolation, conversions ignored while picking."""
    fixed = {}
    for layer in net.convolution_layers():
        alts = _conv_alternatives(layer, registry, costs, None)
        best = min(range(len(alts)), key=lambda i: (alts[i].cost, i))
        fixed[layer.id] = alts[best].primitive_id
    return complete_with_fixed(net, registry, costs, tables, fixed, canonical)


def baseline_all_reference(
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    canonical: DataFormat | None = None,
) -> Selection:
    ref = registry.reference
    fixed = {layer.id: ref.id for layer in net.convolution_layers()}
    return complete_with_fixed(net, registry, costs, tables, fixed, canonical)


def baseline_family(
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    family: str,
    canonical: DataFormat | None = None,
) -> Selection:
    """Replace the reference per layer with the family's fastest applicable
    variant, but only where that variant's own runtime beats the reference;
    conversion overhead is charged afterwards, not considered while picking."""
    known = {p.family for p in registry if not p.is_conversion}
    if family not in known:
        raise InputError(f"unknown primitive family {family!r}")
    ref = registry.reference
    fixed = {}
    for layer in net.convolution_layers():
        ref_cost = costs.node_cost(layer.id, ref.id)
        candidates = [
            (costs.node_cost(layer.id, p.id), i, p.id)
            for i, p in enumerate(registry)
            if p.family == family
            and not p.is_conversion
            and p.applicable(layer.scenario)
            and costs.node_cost(layer.id, p.id) is not None
        ]
        choice = ref.id
        if candidates:
            best_cost, _, best_id = min(candidates)
            if ref_cost is None or best_cost < ref_cost:
                choice = best_id
        fixed[layer.id] = choice
    return complete_with_fixed(net, registry, costs, tables, fixed, canonical)
