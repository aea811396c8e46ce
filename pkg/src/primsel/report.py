"""Strategy comparison and human/machine-readable selection reports.

Strategies: "optimal" (the solver), "greedy" (cheapest primitive per
layer, conversions ignored while picking), "all-reference" (the
registry's reference primitive everywhere), and "family:<name>" (the
family's fastest applicable variant replaces the reference per layer,
only where the variant alone is strictly faster).  Every strategy's
dummy layers are completed optimally, so differences come from the
convolution picks, not from sloppy format placement.  Speedups are
quoted against all-reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import cost as _cost
from .builder import (
    InfeasibleError,
    Selection,
    SelectionProblem,
    baseline_all_reference,
    baseline_family,
    baseline_greedy,
    build_problem,
    select_optimal,
)
from .cost import Cost, is_finite
from .dtgraph import ApspTable, conversion_path
from .model import CostTable, DataFormat, NetworkGraph, Registry, TensorShape
from .pbqp import DEFAULT_EXHAUSTIVE_BOUND, PROVEN_OPTIMAL, SolverInternalError

OPTIMAL = "optimal"
GREEDY = "greedy"
ALL_REFERENCE = "all-reference"
FAMILY_PREFIX = "family:"


@dataclass(frozen=True)
class StrategyResult:
    name: str
    selection: Selection | None
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.selection is not None and self.selection.feasible

    @property
    def total(self) -> Cost | None:
        return None if self.selection is None else self.selection.predicted_total


def default_families(registry: Registry) -> list[str]:
    """Every non-conversion family except the reference primitive's own."""
    ref_family = None
    if registry.reference_primitive is not None:
        ref_family = registry.reference.family
    return sorted(
        {p.family for p in registry if not p.is_conversion} - {ref_family}
    )


def run_strategy(
    name: str,
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    canonical: DataFormat | None = None,
    bound: int | None = DEFAULT_EXHAUSTIVE_BOUND,
) -> StrategyResult:
    try:
        if name == OPTIMAL:
            problem = build_problem(net, registry, costs, tables, canonical=canonical)
            return StrategyResult(name, select_optimal(problem, bound))
        if name == GREEDY:
            return StrategyResult(
                name, baseline_greedy(net, registry, costs, tables, canonical)
            )
        if name == ALL_REFERENCE:
            _require_reference(registry)
            return StrategyResult(
                name, baseline_all_reference(net, registry, costs, tables, canonical)
            )
        if name.startswith(FAMILY_PREFIX):
            _require_reference(registry)
            family = name[len(FAMILY_PREFIX):]
            return StrategyResult(
                name,
                baseline_family(net, registry, costs, tables, family, canonical),
            )
    except InfeasibleError as exc:
        return StrategyResult(name, None, str(exc))
    raise ValueError(f"unknown strategy {name!r}")


def _require_reference(registry: Registry) -> None:
    if registry.reference_primitive is None:
        raise InfeasibleError("registry designates no reference primitive")


def compare(
    net: NetworkGraph,
    registry: Registry,
    costs: CostTable,
    tables: Mapping[TensorShape, ApspTable],
    families: list[str] | None = None,
    canonical: DataFormat | None = None,
    bound: int | None = DEFAULT_EXHAUSTIVE_BOUND,
) -> list[StrategyResult]:
    if families is None:
        families = default_families(registry)
    names = [OPTIMAL, GREEDY]
    names += [FAMILY_PREFIX + f for f in families]
    names += [ALL_REFERENCE]
    results = [
        run_strategy(n, net, registry, costs, tables, canonical, bound) for n in names
    ]
    optimal = results[0]
    if optimal.feasible and optimal.selection.optimality == PROVEN_OPTIMAL:
        for r in results[1:]:
            if r.feasible and r.selection.predicted_total < optimal.selection.predicted_total:
                raise SolverInternalError(
                    f"strategy {r.name} beat the proven optimum: "
                    f"{r.selection.predicted_total} < {optimal.selection.predicted_total}"
                )
    return results


def _node_subtotal(selection: Selection) -> int:
    return sum(alt.cost for alt in selection.assignments.values())


def _speedup(reference_total: Cost | None, total: Cost | None) -> float | None:
    if reference_total is None or total is None:
        return None
    if not (is_finite(reference_total) and is_finite(total)) or total == 0:
        return None
    return reference_total / total


def comparison_to_json(results: list[StrategyResult]) -> dict:
    ref_total = next(
        (r.total for r in results if r.name == ALL_REFERENCE and r.feasible), None
    )
    rows = []
    for r in results:
        row: dict = {"strategy": r.name, "feasible": r.feasible}
        if r.error is not None:
            row["error"] = r.error
        if r.selection is not None:
            nodes = _node_subtotal(r.selection)
            row["total_us"] = _cost.to_us(r.selection.predicted_total)
            row["node_us"] = _cost.to_us(nodes)
            conv = (
                r.selection.predicted_total - nodes
                if r.feasible
                else _cost.INFINITE
            )
            row["conversion_us"] = _cost.to_us(conv)
            row["optimality"] = r.selection.optimality
            speedup = _speedup(ref_total, r.selection.predicted_total)
            if speedup is not None:
                row["speedup_vs_reference"] = round(speedup, 6)
            row["assignments"] = {
                nid: (alt.primitive_id if alt.primitive_id is not None
                      else _format_label(alt))
                for nid, alt in r.selection.assignments.items()
            }
        rows.append(row)
    return {"baseline": ALL_REFERENCE, "strategies": rows}


def _format_label(alt) -> str:
    fmt = alt.output_format if alt.output_format is not None else alt.input_format
    return str(fmt)


def render_comparison(results: list[StrategyResult]) -> str:
    ref_total = next(
        (r.total for r in results if r.name == ALL_REFERENCE and r.feasible), None
    )
    lines = []
    header = f"{'strategy':<24} {'total us':>14} {'nodes us':>14} {'conv us':>12} {'speedup':>9}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in results:
        if r.selection is None:
            lines.append(f"{r.name:<24} {'infeasible':>14}   {r.error or ''}")
            continue
        total = r.selection.predicted_total
        nodes = _node_subtotal(r.selection)
        conv = total - nodes if is_finite(total) else _cost.INFINITE
        speedup = _speedup(ref_total, total)
        lines.append(
            f"{r.name:<24} {_cost.fmt_us(total):>14} {_cost.fmt_us(nodes):>14} "
            f"{_cost.fmt_us(conv):>12} "
            f"{('x%.3f' % speedup) if speedup is not None else 'n/a':>9}"
        )
    return "\n".join(lines) + "\n"


def selection_to_json(problem: SelectionProblem, selection: Selection) -> dict:
    nodes = _node_subtotal(selection)
    conv = (
        selection.predicted_total - nodes
        if is_finite(selection.predicted_total)
        else _cost.INFINITE
    )
    layers = []
    for nid in problem.node_order:
        alt = selection.assignments[nid]
        layers.append(
            {
                "layer": nid,
                "kind": problem.net.layer(nid).kind,
                "primitive": alt.primitive_id,
                "input_format": None if alt.input_format is None else str(alt.input_format),
                "output_format": None if alt.output_format is None else str(alt.output_format),
                "predicted_us": _cost.to_us(alt.cost),
            }
        )
    conversions = []
    for e in problem.net.edges:
        src = selection.assignments[e.producer].output_format
        dst = selection.assignments[e.consumer].input_format
        if src == dst:
            continue
        path = conversion_path(problem.tables[e.shape], src, dst)
        conversions.append(
            {
                "edge": e.key,
                "from": str(src),
                "to": str(dst),
                "steps": list(path.step_ids),
                "predicted_us": _cost.to_us(path.total),
            }
        )
    return {
        "total_predicted_us": _cost.to_us(selection.predicted_total),
        "node_predicted_us": _cost.to_us(nodes),
        "conversion_predicted_us": _cost.to_us(conv),
        "optimality": selection.optimality,
        "layers": layers,
        "conversions": conversions,
    }


def render_selection(problem: SelectionProblem, selection: Selection) -> str:
    doc = selection_to_json(problem, selection)
    lines = [
        f"predicted total: {doc['total_predicted_us']} us "
        f"(nodes {doc['node_predicted_us']}, conversions {doc['conversion_predicted_us']})",
        f"optimality: {doc['optimality']}",
        "",
        f"{'layer':<16} {'kind':<13} {'implementation':<20} {'in':<10} {'out':<10} {'us':>12}",
    ]
    for row in doc["layers"]:
        impl = row["primitive"] or "(none)"
        lines.append(
            f"{row['layer']:<16} {row['kind']:<13} {impl:<20} "
            f"{(row['input_format'] or '-'):<10} {(row['output_format'] or '-'):<10} "
            f"{row['predicted_us']:>12}"
        )
    if doc["conversions"]:
        lines.append("")
        lines.append("inserted conversions:")
        for row in doc["conversions"]:
            chain = " then ".join(row["steps"]) or "(direct)"
            lines.append(
                f"  {row['edge']}: {row['from']} to {row['to']} via {chain} "
                f"({row['predicted_us']} us)"
            )
    return "\n".join(lines) + "\n"


def explain_to_json(problem: SelectionProblem) -> dict:
    """Instance statistics before solving: sizes, choices, conversion tables."""
    per_node = []
    for nid in problem.node_order:
        alts = problem.alternatives[nid]
        per_node.append(
            {
                "layer": nid,
                "kind": problem.net.layer(nid).kind,
                "choices": len(alts),
                "options": [
                    {
                        "primitive": a.primitive_id,
                        "input_format": None if a.input_format is None else str(a.input_format),
                        "output_format": None if a.output_format is None else str(a.output_format),
                        "predicted_us": _cost.to_us(a.cost),
                    }
                    for a in alts
                ],
            }
        )
    return {
        "canonical_format": str(problem.canonical),
        "layers": per_node,
        "edge_count": len(problem.net.edges),
        "assignment_space": problem.instance.assignment_space,
        "formats": [str(f) for f in (next(iter(problem.tables.values())).formats if problem.tables else ())],
    }


def explain_edge_to_json(
    problem: SelectionProblem, selection: Selection, edge_key: str
) -> dict:
    """Conversion diagnostics for one dataflow edge under a selection.

    Shows the full least-cost distance matrix for the edge's tensor shape
    and the conversion chain the selection implies on that edge.
    """
    edge = next((e for e in problem.net.edges if e.key == edge_key), None)
    if edge is None:
        known = ", ".join(e.key for e in problem.net.edges)
        raise ValueError(f"unknown edge {edge_key!r}; known edges: {known}")
    table = problem.tables[edge.shape]
    src = selection.assignments[edge.producer].output_format
    dst = selection.assignments[edge.consumer].input_format
    path = conversion_path(table, src, dst)
    distances = {
        str(a): {
            str(b): (_cost.to_us(d) if is_finite(d) else "inf")
            for b, d in zip(table.formats, row)
        }
        for a, row in zip(table.formats, table.dist)
    }
    return {
        "edge": edge.key,
        "shape": edge.shape.key,
        "producer_format": str(src),
        "consumer_format": str(dst),
        "chain": [
            {
                "primitive": s.primitive_id,
                "src": str(s.src),
                "dst": str(s.dst),
                "predicted_us": _cost.to_us(s.cost),
            }
            for s in path.steps
        ],
        "chain_total_us": _cost.to_us(path.total),
        "distances": distances,
    }


def render_explain_edge(doc: dict) -> str:
    lines = [
        f"edge: {doc['edge']} (shape {doc['shape']})",
        f"producer emits:   {doc['producer_format']}",
        f"consumer expects: {doc['consumer_format']}",
    ]
    if doc["chain"]:
        lines.append(f"conversion chain ({doc['chain_total_us']} us):")
        for step in doc["chain"]:
            lines.append(
                f"  {step['primitive']:<20} {step['src']:<10} to "
                f"{step['dst']:<10} {step['predicted_us']} us"
            )
    else:
        lines.append("conversion chain: (none)")
    fmts = list(doc["distances"])
    width = max(10, max(len(f) for f in fmts))
    lines.append("least conversion cost (us), row to column:")
    lines.append(" " * (width + 2) + " ".join(f"{f:>{width}}" for f in fmts))
    for a in fmts:
        row = " ".join(f"{str(doc['distances'][a][b]):>{width}}" for b in fmts)
        lines.append(f"{a:<{width}}  {row}")
    return "\n".join(lines) + "\n"


def render_explain(problem: SelectionProblem) -> str:
    doc = explain_to_json(problem)
    lines = [
        f"canonical format: {doc['canonical_format']}",
        f"dataflow edges: {doc['edge_count']}",
        f"assignment space: {doc['assignment_space']}",
        f"formats in play: {', '.join(doc['formats']) or '(none)'}",
        "",
    ]
    for row in doc["layers"]:
        lines.append(f"{row['layer']} ({row['kind']}, {row['choices']} choices):")
        for opt in row["options"]:
            impl = opt["primitive"] or "(format only)"
            fin = opt["input_format"] or "-"
            fout = opt["output_format"] or "-"
            lines.append(
                f"  {impl:<20} {fin:<10} to {fout:<10} {opt['predicted_us']} us"
            )
    return "\n".join(lines) + "\n"
