"""Data-format transformation graph and per-shape shortest conversion paths.

Formats are nodes, direct conversion routines are directed edges, and the
least-cost chain between two formats is a shortest path.  Format counts
are small (a few dozen at most), so Floyd-Warshall with a next-hop matrix
is used; the dense distance matrix doubles as the transitive closure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

from .cost import INFINITE, Cost
from .model import CostTable, DataFormat, Primitive, TensorShape

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DtEdge:
    """A direct conversion routine, as a directed edge of the DT graph."""

    primitive_id: str
    src: DataFormat
    dst: DataFormat

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"conversion {self.primitive_id} maps a format to itself")


@dataclass(frozen=True)
class DtGraph:
    formats: tuple[DataFormat, ...]
    edges: tuple[DtEdge, ...]

    def index(self, fmt: DataFormat) -> int:
        try:
            return self.formats.index(fmt)
        except ValueError:
            raise KeyError(f"format {fmt} is not a DT graph node") from None


def build_dt_graph(registry: Iterable[Primitive]) -> DtGraph:
    """Nodes: every format any primitive consumes or produces; edges: conversions."""
    prims = list(registry)
    formats = sorted({p.l_in for p in prims} | {p.l_out for p in prims})
    edges = tuple(DtEdge(p.id, p.l_in, p.l_out) for p in prims if p.is_conversion)
    return DtGraph(tuple(formats), edges)


@dataclass(frozen=True)
class ResolvedEdge:
    """A conversion edge priced for one tensor shape."""

    primitive_id: str
    src: DataFormat
    dst: DataFormat
    cost: Cost


@dataclass(frozen=True)
class ApspTable:
    """All-pairs least conversion costs for one tensor shape.

    dist[i][j] is the cheapest chain cost from formats[i] to formats[j]
    (INFINITE when unreachable); next_hop[i][j] is the first edge of one
    cheapest chain.
    """

    shape: TensorShape
    formats: tuple[DataFormat, ...]
    dist: tuple[tuple[Cost, ...], ...]
    next_hop: tuple[tuple[ResolvedEdge | None, ...], ...]

    def index(self, fmt: DataFormat) -> int:
        try:
            return self.formats.index(fmt)
        except ValueError:
            raise KeyError(f"format {fmt} is not a DT graph node") from None

    def cost_between(self, src: DataFormat, dst: DataFormat) -> Cost:
        return self.dist[self.index(src)][self.index(dst)]


@dataclass(frozen=True)
class ConversionPath:
    """A chain of conversion routines realizing one format change."""

    steps: tuple[ResolvedEdge, ...]
    total: Cost
    shape: TensorShape
    reachable: bool

    @property
    def step_ids(self) -> tuple[str, ...]:
        return tuple(s.primitive_id for s in self.steps)


def _collapse_edges(g: DtGraph, shape: TensorShape, costs: CostTable) -> dict[tuple[int, int], ResolvedEdge]:
    """Per format pair keep the cheapest routine (ties: lowest primitive id)."""
    best: dict[tuple[int, int], ResolvedEdge] = {}
    for edge in g.edges:
        ns = costs.conversion_cost(edge.primitive_id, shape)
        if ns is None:
            logger.warning(
                "no profiled cost for conversion %s on shape %s; treating as unreachable",
                edge.primitive_id,
                shape.key,
            )
            continue
        key = (g.index(edge.src), g.index(edge.dst))
        resolved = ResolvedEdge(edge.primitive_id, edge.src, edge.dst, ns)
        cur = best.get(key)
        if cur is None or (resolved.cost, resolved.primitive_id) < (cur.cost, cur.primitive_id):
            best[key] = resolved
    return best


def solve_apsp(g: DtGraph, shape: TensorShape, costs: CostTable) -> ApspTable:
    """Floyd-Warshall over saturating costs, with next-hop path reconstruction."""
    n = len(g.formats)
    dist: list[list[Cost]] = [[INFINITE] * n for _ in range(n)]
    nxt: list[list[ResolvedEdge | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0
    for (i, j), edge in _collapse_edges(g, shape, costs).items():
        if i == j:
            continue
        dist[i][j] = edge.cost
        nxt[i][j] = edge
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if dik == INFINITE or i == k:
                continue
            di = dist[i]
            for j in range(n):
                via = dik + dk[j]
                if via < di[j]:
                    di[j] = via
                    nxt[i][j] = nxt[i][k]
    return ApspTable(
        shape=shape,
        formats=g.formats,
        dist=tuple(tuple(row) for row in dist),
        next_hop=tuple(tuple(row) for row in nxt),
    )


def conversion_path(table: ApspTable, src: DataFormat, dst: DataFormat) -> ConversionPath:
    """Reconstruct the recorded cheapest chain from src to dst."""
    i, j = table.index(src), table.index(dst)
    if i == j:
        return ConversionPath((), 0, table.shape, True)
    if table.dist[i][j] == INFINITE:
        return ConversionPath((), INFINITE, table.shape, False)
    steps = []
    pos = i
    while pos != j:
        edge = table.next_hop[pos][j]
        if edge is None:  # pragma: no cover - inconsistent table
            raise RuntimeError(f"next-hop chain broken between {src} and {dst}")
        steps.append(edge)
        pos = table.index(edge.dst)
    return ConversionPath(tuple(steps), table.dist[i][j], table.shape, True)


def apsp_cache(
    g: DtGraph, shapes: Iterable[TensorShape], costs: CostTable
) -> Mapping[TensorShape, ApspTable]:
    """One ApspTable per distinct shape (conversion cost depends on tensor size)."""
    return {shape: solve_apsp(g, shape, costs) for shape in set(shapes)}
