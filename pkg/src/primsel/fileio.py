"""JSON file formats for networks, primitive registries and cost tables.

All loaders reject unknown fields.  Costs cross this boundary in
microseconds and are held internally as integer nanoseconds; the
conversion round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from . import cost
from .model import (
    Constraint,
    CostTable,
    CostTableMeta,
    DataFormat,
    Layer,
    NetEdge,
    NetworkGraph,
    Primitive,
    Registry,
    Scenario,
    TensorShape,
)


class InputError(Exception):
    """Malformed or inconsistent input file; the CLI maps this to exit code 2."""


def read_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def check_fields(obj: Any, required: tuple[str, ...], optional: tuple[str, ...], ctx: str) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{ctx}: expected an object, got {type(obj).__name__}")
    missing = [f for f in required if f not in obj]
    if missing:
        raise InputError(f"{ctx}: missing fields {missing}")
    unknown = [f for f in obj if f not in required and f not in optional]
    if unknown:
        raise InputError(f"{ctx}: unknown fields {unknown}")


def _wrap(ctx: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, KeyError) as exc:
        raise InputError(f"{ctx}: {exc}") from exc


# -- data formats / shapes / scenarios ---------------------------------------

def format_from_json(obj: Any, ctx: str) -> DataFormat:
    check_fields(obj, ("layout",), ("element_type",), ctx)
    return _wrap(ctx, DataFormat, obj["layout"], obj.get("element_type", "fp32"))


def format_to_json(fmt: DataFormat) -> dict:
    return {"layout": fmt.layout, "element_type": fmt.element_type}


def shape_from_json(obj: Any, ctx: str) -> TensorShape:
    check_fields(obj, ("c", "h", "w"), (), ctx)
    return _wrap(ctx, TensorShape, obj["c"], obj["h"], obj["w"])


def shape_to_json(shape: TensorShape) -> dict:
    return {"c": shape.c, "h": shape.h, "w": shape.w}


def scenario_from_json(obj: Any, ctx: str) -> Scenario:
    check_fields(obj, ("c", "h", "w", "delta", "k", "m"), (), ctx)
    return _wrap(ctx, Scenario, obj["c"], obj["h"], obj["w"], obj["delta"], obj["k"], obj["m"])


def scenario_to_json(s: Scenario) -> dict:
    return {"c": s.c, "h": s.h, "w": s.w, "delta": s.delta, "k": s.k, "m": s.m}


# -- network graph ------------------------------------------------------------

def network_from_json(obj: Any) -> NetworkGraph:
    check_fields(obj, ("nodes", "edges"), (), "network")
    nodes = []
    for i, node in enumerate(obj["nodes"]):
        ctx = f"network node #{i}"
        check_fields(node, ("id", "kind"), ("scenario",), ctx)
        scenario = None
        if "scenario" in node:
            scenario = scenario_from_json(node["scenario"], f"{ctx} scenario")
        nodes.append(_wrap(ctx, Layer, node["id"], node["kind"], scenario))
    edges = []
    for i, edge in enumerate(obj["edges"]):
        ctx = f"network edge #{i}"
        check_fields(edge, ("producer", "consumer", "shape"), (), ctx)
        shape = shape_from_json(edge["shape"], f"{ctx} shape")
        edges.append(NetEdge(edge["producer"], edge["consumer"], shape))
    return _wrap("network", NetworkGraph, tuple(nodes), tuple(edges))


def network_to_json(net: NetworkGraph) -> dict:
    nodes = []
    for n in net.nodes:
        node: dict[str, Any] = {"id": n.id, "kind": n.kind}
        if n.scenario is not None:
            node["scenario"] = scenario_to_json(n.scenario)
        nodes.append(node)
    edges = [
        {"producer": e.producer, "consumer": e.consumer, "shape": shape_to_json(e.shape)}
        for e in net.edges
    ]
    return {"nodes": nodes, "edges": edges}


def load_network(path: str | Path) -> NetworkGraph:
    return network_from_json(read_json(path))


# -- primitive registry -------------------------------------------------------

def _constraint_from_json(obj: Any, ctx: str) -> Constraint:
    check_fields(obj, ("field", "op", "value"), (), ctx)
    value = obj["value"]
    if isinstance(value, list):
        value = tuple(value)
    return _wrap(ctx, Constraint, obj["field"], obj["op"], value)


def _constraint_to_json(c: Constraint) -> dict:
    value = list(c.value) if isinstance(c.value, tuple) else c.value
    return {"field": c.field, "op": c.op, "value": value}


def registry_from_json(obj: Any) -> Registry:
    check_fields(obj, ("primitives",), ("canonical_format", "reference_primitive"), "registry")
    prims = []
    for i, entry in enumerate(obj["primitives"]):
        ctx = f"registry primitive #{i}"
        check_fields(entry, ("id", "family", "l_in", "l_out"), ("applicability",), ctx)
        constraints = tuple(
            _constraint_from_json(c, f"{ctx} applicability #{j}")
            for j, c in enumerate(entry.get("applicability", []))
        )
        prims.append(
            _wrap(
                ctx,
                Primitive,
                entry["id"],
                entry["family"],
                format_from_json(entry["l_in"], f"{ctx} l_in"),
                format_from_json(entry["l_out"], f"{ctx} l_out"),
                constraints,
            )
        )
    canonical = None
    if "canonical_format" in obj:
        canonical = format_from_json(obj["canonical_format"], "registry canonical_format")
    return _wrap("registry", Registry, tuple(prims), canonical, obj.get("reference_primitive"))


def registry_to_json(reg: Registry) -> dict:
    out: dict[str, Any] = {
        "primitives": [
            {
                "id": p.id,
                "family": p.family,
                "l_in": format_to_json(p.l_in),
                "l_out": format_to_json(p.l_out),
                "applicability": [_constraint_to_json(c) for c in p.applicability],
            }
            for p in reg.primitives
        ]
    }
    if reg.canonical_format is not None:
        out["canonical_format"] = format_to_json(reg.canonical_format)
    if reg.reference_primitive is not None:
        out["reference_primitive"] = reg.reference_primitive
    return out


def load_registry(path: str | Path) -> Registry:
    return registry_from_json(read_json(path))


# -- cost table ---------------------------------------------------------------

def cost_table_from_json(obj: Any) -> CostTable:
    check_fields(obj, ("node_costs", "conversion_costs"), ("metadata",), "cost table")
    node_costs: dict[tuple[str, str], int] = {}
    for layer_id, per_prim in obj["node_costs"].items():
        if not isinstance(per_prim, dict):
            raise InputError(f"cost table node_costs[{layer_id}] must be an object")
        for prim_id, us in per_prim.items():
            ns = _wrap(f"node cost ({layer_id}, {prim_id})", cost.from_us, us)
            if not cost.is_finite(ns):
                raise InputError(f"node cost ({layer_id}, {prim_id}) must be finite")
            node_costs[(layer_id, prim_id)] = ns
    conversion_costs: dict[tuple[str, TensorShape], int] = {}
    for prim_id, per_shape in obj["conversion_costs"].items():
        if not isinstance(per_shape, dict):
            raise InputError(f"cost table conversion_costs[{prim_id}] must be an object")
        for shape_key, us in per_shape.items():
            ctx = f"conversion cost ({prim_id}, {shape_key})"
            shape = _wrap(ctx, TensorShape.parse_key, shape_key)
            ns = _wrap(ctx, cost.from_us, us)
            if not cost.is_finite(ns):
                raise InputError(f"{ctx} must be finite")
            conversion_costs[(prim_id, shape)] = ns
    meta = CostTableMeta()
    if "metadata" in obj:
        check_fields(obj["metadata"], (), ("platform", "threads", "timestamp"), "cost table metadata")
        meta = CostTableMeta(
            platform=obj["metadata"].get("platform", ""),
            threads=obj["metadata"].get("threads", 1),
            timestamp=obj["metadata"].get("timestamp", ""),
        )
    return CostTable(node_costs, conversion_costs, meta)


def cost_table_to_json(table: CostTable) -> dict:
    node_costs: dict[str, dict[str, Any]] = {}
    for (layer_id, prim_id), ns in table.node_costs.items():
        node_costs.setdefault(layer_id, {})[prim_id] = cost.to_us(ns)
    conversion_costs: dict[str, dict[str, Any]] = {}
    for (prim_id, shape), ns in table.conversion_costs.items():
        conversion_costs.setdefault(prim_id, {})[shape.key] = cost.to_us(ns)
    return {
        "node_costs": node_costs,
        "conversion_costs": conversion_costs,
        "metadata": {
            "platform": table.metadata.platform,
            "threads": table.metadata.threads,
            "timestamp": table.metadata.timestamp,
        },
    }


def load_cost_table(path: str | Path) -> CostTable:
    return cost_table_from_json(read_json(path))


def save_cost_table(path: str | Path, table: CostTable) -> None:
    write_json(path, cost_table_to_json(table))
