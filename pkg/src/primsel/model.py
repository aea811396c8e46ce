"""Domain vocabulary: scenarios, data formats, primitives, networks, cost tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .cost import Cost, validate_cost

LAYOUTS = ("chw", "cwh", "hcw", "hwc", "wch", "whc")

LAYER_KINDS = ("convolution", "passthrough", "input", "output")

SCENARIO_FIELDS = ("c", "h", "w", "delta", "k", "m")

CONSTRAINT_OPS = ("eq", "ne", "lt", "le", "gt", "ge", "in")

CONVERSION_FAMILY = "conversion"


@dataclass(frozen=True, order=True)
class DataFormat:
    """A tensor layout (permutation of C,H,W) plus scalar element type."""

    layout: str
    element_type: str = "fp32"

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}; expected one of {LAYOUTS}")
        if not self.element_type or not isinstance(self.element_type, str):
            raise ValueError(f"bad element type {self.element_type!r}")

    def __str__(self):
        return f"{self.layout}:{self.element_type}"

    @classmethod
    def parse(cls, text: str) -> "DataFormat":
        layout, sep, element_type = text.partition(":")
        if not sep:
            raise ValueError(f"data format must look like 'chw:fp32', got {text!r}")
        return cls(layout, element_type)


@dataclass(frozen=True)
class TensorShape:
    """Logical (layout-independent) dimensions of a 3D tensor."""

    c: int
    h: int
    w: int

    def __post_init__(self):
        for name in ("c", "h", "w"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"tensor dimension {name}={v!r} must be a positive int")

    @property
    def volume(self) -> int:
        return self.c * self.h * self.w

    @property
    def key(self) -> str:
        return f"{self.c}x{self.h}x{self.w}"

    @classmethod
    def parse_key(cls, key: str) -> "TensorShape":
        parts = key.split("x")
        if len(parts) != 3:
            raise ValueError(f"shape key must look like '3x8x8', got {key!r}")
        try:
            c, h, w = (int(p) for p in parts)
        except ValueError:
            raise ValueError(f"shape key must hold three ints, got {key!r}") from None
        return cls(c, h, w)


@dataclass(frozen=True)
class Scenario:
    """Workload of one convolution layer: {C, H, W, stride, kernel radix, M}."""

    c: int
    h: int
    w: int
    delta: int
    k: int
    m: int

    def __post_init__(self):
        for name in SCENARIO_FIELDS:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"scenario field {name}={v!r} must be a positive int")
        if self.k % 2 == 0:
            raise ValueError(f"kernel radix k={self.k} must be odd (square k x k kernels)")

    @property
    def input_shape(self) -> TensorShape:
        return TensorShape(self.c, self.h, self.w)


def output_shape(s: Scenario) -> TensorShape:
    """Output dimensions under "same" zero-padding: (m, ceil(h/delta), ceil(w/delta))."""
    return TensorShape(s.m, math.ceil(s.h / s.delta), math.ceil(s.w / s.delta))


def macc_count(s: Scenario) -> int:
    """Multiply-accumulate count out_h*out_w*c*k^2*m; reporting and sanity checks only."""
    out = output_shape(s)
    return out.h * out.w * s.c * s.k * s.k * s.m


@dataclass(frozen=True)
class Constraint:
    """One field test of an applicability predicate, e.g. delta == 1 or k in {3, 5}."""

    field: str
    op: str
    value: int | tuple[int, ...]

    def __post_init__(self):
        if self.field not in SCENARIO_FIELDS:
            raise ValueError(f"constraint field {self.field!r} not a scenario field")
        if self.op not in CONSTRAINT_OPS:
            raise ValueError(f"unknown constraint op {self.op!r}")
        if self.op == "in":
            if not isinstance(self.value, tuple) or not self.value:
                raise ValueError("'in' constraints need a nonempty tuple of ints")
        elif not isinstance(self.value, int) or isinstance(self.value, bool):
            raise ValueError(f"constraint value {self.value!r} must be an int")

    def holds(self, s: Scenario) -> bool:
        v = getattr(s, self.field)
        if self.op == "eq":
            return v == self.value
        if self.op == "ne":
            return v != self.value
        if self.op == "lt":
            return v < self.value
        if self.op == "le":
            return v <= self.value
        if self.op == "gt":
            return v > self.value
        if self.op == "ge":
            return v >= self.value
        return v in self.value


@dataclass(frozen=True)
class Primitive:
    """A concrete layer routine: input layout, identifier, output layout.

    ``family`` groups variants of one algorithm (direct loop, patch
    matrix, FFT, ...); the reserved family "conversion" marks data-format
    conversion routines, which become edges of the DT graph.
    """

    id: str
    family: str
    l_in: DataFormat
    l_out: DataFormat
    applicability: tuple[Constraint, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("primitive id must be nonempty")
        if not self.family:
            raise ValueError(f"primitive {self.id}: family must be nonempty")

    @property
    def is_conversion(self) -> bool:
        return self.family == CONVERSION_FAMILY

    def applicable(self, s: Scenario) -> bool:
        return all(c.holds(s) for c in self.applicability)


def applicable_primitives(s: Scenario, registry: Iterable[Primitive]) -> list[Primitive]:
    """Primitives whose applicability predicate holds on s, in registry order."""
    prims = list(registry)
    ids = [p.id for p in prims]
    if len(set(ids)) != len(ids):
        raise ValueError("registry primitive ids must be unique")
    return [p for p in prims if p.applicable(s)]


@dataclass(frozen=True)
class Registry:
    """A primitive library, with optional canonical-format and reference tags."""

    primitives: tuple[Primitive, ...]
    canonical_format: DataFormat | None = None
    reference_primitive: str | None = None

    def __post_init__(self):
        ids = [p.id for p in self.primitives]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise ValueError(f"duplicate primitive ids in registry: {sorted(dupes)}")
        if self.reference_primitive is not None and self.reference_primitive not in ids:
            raise ValueError(f"reference primitive {self.reference_primitive!r} not in registry")

    def __iter__(self):
        return iter(self.primitives)

    def get(self, prim_id: str) -> Primitive:
        for p in self.primitives:
            if p.id == prim_id:
                return p
        raise KeyError(prim_id)

    @property
    def reference(self) -> Primitive:
        if self.reference_primitive is None:
            raise ValueError("registry designates no reference primitive")
        return self.get(self.reference_primitive)


@dataclass(frozen=True)
class Layer:
    id: str
    kind: str
    scenario: Scenario | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("layer id must be nonempty")
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"layer {self.id}: unknown kind {self.kind!r}")
        if self.kind == "convolution" and self.scenario is None:
            raise ValueError(f"convolution layer {self.id} needs a scenario")
        if self.kind != "convolution" and self.scenario is not None:
            raise ValueError(f"{self.kind} layer {self.id} must not carry a scenario")


@dataclass(frozen=True)
class NetEdge:
    producer: str
    consumer: str
    shape: TensorShape

    @property
    def key(self) -> str:
        return f"{self.producer}->{self.consumer}"


@dataclass(frozen=True)
class NetworkGraph:
    """Directed acyclic graph of layers; edges carry the flowing tensor's shape."""

    nodes: tuple[Layer, ...]
    edges: tuple[NetEdge, ...]

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate layer ids in network")
        known = set(ids)
        for e in self.edges:
            for end in (e.producer, e.consumer):
                if end not in known:
                    raise ValueError(f"edge {e.key} references unknown layer {end!r}")
            if e.producer == e.consumer:
                raise ValueError(f"self-edge on layer {e.producer}")
        by_id = {n.id: n for n in self.nodes}
        for e in self.edges:
            prod = by_id[e.producer]
            if prod.kind == "convolution" and e.shape != output_shape(prod.scenario):
                raise ValueError(
                    f"edge {e.key} shape {e.shape.key} does not match producer output "
                    f"{output_shape(prod.scenario).key}"
                )
        self.topological_order()  # raises on cycles

    def layer(self, layer_id: str) -> Layer:
        for n in self.nodes:
            if n.id == layer_id:
                return n
        raise KeyError(layer_id)

    def in_edges(self, layer_id: str) -> list[NetEdge]:
        return [e for e in self.edges if e.consumer == layer_id]

    def out_edges(self, layer_id: str) -> list[NetEdge]:
        return [e for e in self.edges if e.producer == layer_id]

    def edge(self, producer: str, consumer: str) -> NetEdge:
        for e in self.edges:
            if e.producer == producer and e.consumer == consumer:
                return e
        raise KeyError(f"{producer}->{consumer}")

    def convolution_layers(self) -> list[Layer]:
        return [n for n in self.nodes if n.kind == "convolution"]

    def edge_shapes(self) -> set[TensorShape]:
        return {e.shape for e in self.edges}

    def topological_order(self) -> list[str]:
        """Kahn's algorithm, stable in node declaration order; raises on cycles."""
        indeg = {n.id: 0 for n in self.nodes}
        for e in self.edges:
            indeg[e.consumer] += 1
        order = []
        ready = [n.id for n in self.nodes if indeg[n.id] == 0]
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for e in self.out_edges(nid):
                indeg[e.consumer] -= 1
                if indeg[e.consumer] == 0:
                    ready.append(e.consumer)
        if len(order) != len(self.nodes):
            raise ValueError("network graph contains a cycle")
        return order


@dataclass(frozen=True)
class CostTableMeta:
    platform: str = ""
    threads: int = 1
    timestamp: str = ""


@dataclass(frozen=True)
class CostTable:
    """Profiled runtimes: (layer, primitive) -> ns and (conversion, shape) -> ns.

    All stored costs are finite nonnegative int nanoseconds; missing entries
    mean "not profiled" and are priced INFINITE (with a warning) downstream.
    """

    node_costs: Mapping[tuple[str, str], int] = field(default_factory=dict)
    conversion_costs: Mapping[tuple[str, TensorShape], int] = field(default_factory=dict)
    metadata: CostTableMeta = field(default_factory=CostTableMeta)

    def __post_init__(self):
        for label, table in (("node", self.node_costs), ("conversion", self.conversion_costs)):
            for key, ns in table.items():
                if not isinstance(ns, int) or isinstance(ns, bool):
                    raise ValueError(f"{label} cost for {key} must be finite int ns, got {ns!r}")
                validate_cost(ns)

    def node_cost(self, layer_id: str, prim_id: str) -> int | None:
        return self.node_costs.get((layer_id, prim_id))

    def conversion_cost(self, prim_id: str, shape: TensorShape) -> int | None:
        return self.conversion_costs.get((prim_id, shape))

    def validate_against(self, net: NetworkGraph, registry: Registry) -> None:
        """Check that node costs exist only where the primitive is applicable."""
        for (layer_id, prim_id) in self.node_costs:
            layer = net.layer(layer_id)
            if layer.kind != "convolution":
                raise ValueError(f"node cost recorded for non-convolution layer {layer_id}")
            prim = registry.get(prim_id)
            if not prim.applicable(layer.scenario):
                raise ValueError(
                    f"node cost recorded for inapplicable pair ({layer_id}, {prim_id})"
                )
