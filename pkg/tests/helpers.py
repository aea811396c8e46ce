"""Independent reference implementations and random case generators.

Everything here is deliberately written from scratch with different
algorithms than the package (plain loops, heapq Dijkstra, itertools
enumeration) so the tests cross-check real behavior instead of echoing
the implementation.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import defaultdict

import numpy as np

from primsel.dtgraph import DtEdge, DtGraph
from primsel.model import (
    CostTable,
    DataFormat,
    Layer,
    NetEdge,
    NetworkGraph,
    Primitive,
    Registry,
    Scenario,
    TensorShape,
    output_shape,
)

INF = math.inf


# -- convolution oracle -------------------------------------------------------

def conv_oracle(inp: np.ndarray, ker: np.ndarray, delta: int) -> np.ndarray:
    """Scalar triple-loop convolution in float64; inp is (c, h, w)."""
    c, h, w = inp.shape
    m, _, k, _ = ker.shape
    oh = -(-h // delta)
    ow = -(-w // delta)
    half = k // 2
    out = np.zeros((m, oh, ow), dtype=np.float64)
    for om in range(m):
        for y in range(oh):
            for x in range(ow):
                acc = 0.0
                for ch in range(c):
                    for i in range(k):
                        yy = delta * y + i - half
                        if yy < 0 or yy >= h:
                            continue
                        for j in range(k):
                            xx = delta * x + j - half
                            if 0 <= xx < w:
                                acc += float(inp[ch, yy, xx]) * float(ker[om, ch, i, j])
                out[om, y, x] = acc
    return out


# -- PBQP oracle --------------------------------------------------------------

def brute_force_pbqp(vectors, edges):
    """Enumerate every assignment; ties go to the first (lexicographic) one."""
    best = None
    best_choice = None
    for choice in itertools.product(*[range(len(v)) for v in vectors]):
        total = 0
        for u, r in enumerate(choice):
            total = total + vectors[u][r]
        for a, b, matrix in edges:
            total = total + matrix[choice[a]][choice[b]]
        if best is None or total < best:
            best, best_choice = total, choice
    if best is None:  # zero nodes
        return (), 0
    return best_choice, best


def random_instance(rng, max_nodes=8, max_choices=4, p_inf=0.1, p_edge=0.5):
    n = int(rng.integers(1, max_nodes + 1))
    ks = [int(rng.integers(1, max_choices + 1)) for _ in range(n)]

    def one_cost():
        if rng.random() < p_inf:
            return INF
        return int(rng.integers(0, 100_000))

    vectors = [[one_cost() for _ in range(k)] for k in ks]
    edges = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p_edge:
                edges.append(
                    (a, b, [[one_cost() for _ in range(ks[b])] for _ in range(ks[a])])
                )
    return vectors, edges


def random_sparse_instance(rng, max_nodes=8, max_choices=4, p_inf=0.1):
    """Path-plus-chords topology, so degree-1 and degree-2 folds actually fire."""
    n = int(rng.integers(2, max_nodes + 1))
    ks = [int(rng.integers(1, max_choices + 1)) for _ in range(n)]

    def one_cost():
        if rng.random() < p_inf:
            return INF
        return int(rng.integers(0, 100_000))

    vectors = [[one_cost() for _ in range(k)] for k in ks]
    edges = []
    for a in range(n - 1):
        edges.append(
            (a, a + 1, [[one_cost() for _ in range(ks[a + 1])] for _ in range(ks[a])])
        )
    if n > 3 and rng.random() < 0.4:
        a = int(rng.integers(0, n - 2))
        b = int(rng.integers(a + 2, n))
        edges.append((a, b, [[one_cost() for _ in range(ks[b])] for _ in range(ks[a])]))
    return vectors, edges


# -- shortest-path oracles ----------------------------------------------------

def dijkstra(n: int, arcs, src: int):
    """arcs: iterable of (u, v, weight >= 0); returns dist list with INF."""
    adj = defaultdict(list)
    for u, v, w in arcs:
        adj[u].append((v, w))
    dist = [INF] * n
    dist[src] = 0
    heap = [(0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def reachability_closure(n: int, arcs):
    reach = [[i == j for j in range(n)] for i in range(n)]
    for u, v, _ in arcs:
        reach[u][v] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_k = reach[k]
                row_i = reach[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return reach


ALL_FORMATS = tuple(
    DataFormat(layout, et)
    for layout in ("chw", "cwh", "hcw", "hwc", "wch", "whc")
    for et in ("fp32", "fp16")
)


def random_dt_case(rng):
    """A DT graph plus a cost table pricing every edge on one shape."""
    n = int(rng.integers(2, 13))
    order = rng.permutation(len(ALL_FORMATS))[:n]
    formats = tuple(ALL_FORMATS[i] for i in order)
    shape = TensorShape(int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 9)))
    n_edges = int(rng.integers(0, 31))
    dt_edges = []
    conversion_costs = {}
    arcs = []
    for e in range(n_edges):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        if i == j:
            continue
        prim_id = f"cv{e}"
        cost = int(rng.integers(1, 100_000))
        dt_edges.append(DtEdge(prim_id, formats[i], formats[j]))
        conversion_costs[(prim_id, shape)] = cost
        arcs.append((i, j, cost))
    g = DtGraph(formats, tuple(dt_edges))
    costs = CostTable(conversion_costs=conversion_costs)
    return g, costs, shape, arcs


# -- random selection problems ------------------------------------------------

_NET_LAYOUTS = ("chw", "hwc", "cwh")


def random_net_case(rng):
    """A chain-with-diamonds network plus a synthetic registry and cost table.

    Conversion coverage is complete most of the time; otherwise a random
    subset, which can make the selection infeasible on purpose.
    """
    shape = TensorShape(
        int(rng.integers(1, 4)), int(rng.integers(3, 8)), int(rng.integers(3, 8))
    )
    nodes = [Layer("in", "input")]
    edges: list[NetEdge] = []
    frontier = ["in"]
    inner = int(rng.integers(1, 10))
    idx = 0
    while idx < inner:
        join_pending = len(frontier) == 2
        roll = rng.random()
        if not join_pending and roll < 0.2 and idx + 2 < inner:
            a, b = f"split{idx}a", f"split{idx}b"
            for nid in (a, b):
                nodes.append(Layer(nid, "passthrough"))
                for src in frontier:
                    edges.append(NetEdge(src, nid, shape))
            frontier = [a, b]
            idx += 2
            continue
        if roll < 0.6:
            nid = f"conv{idx}"
            s = Scenario(
                shape.c,
                shape.h,
                shape.w,
                int(rng.choice((1, 2))),
                int(rng.choice((1, 3, 5))),
                int(rng.integers(1, 5)),
            )
            nodes.append(Layer(nid, "convolution", s))
            for src in frontier:
                edges.append(NetEdge(src, nid, shape))
            shape = output_shape(s)
        else:
            nid = f"relu{idx}"
            nodes.append(Layer(nid, "passthrough"))
            for src in frontier:
                edges.append(NetEdge(src, nid, shape))
        frontier = [nid]
        idx += 1
    if len(frontier) == 2:
        nodes.append(Layer("join", "passthrough"))
        for src in frontier:
            edges.append(NetEdge(src, "join", shape))
        frontier = ["join"]
    nodes.append(Layer("out", "output"))
    for src in frontier:
        edges.append(NetEdge(src, "out", shape))
    net = NetworkGraph(tuple(nodes), tuple(edges))

    n_prims = int(rng.integers(2, 5))
    prims = [
        Primitive(
            f"p{i}",
            f"fam{i % 2}",
            DataFormat(str(rng.choice(_NET_LAYOUTS))),
            DataFormat(str(rng.choice(_NET_LAYOUTS))),
        )
        for i in range(n_prims)
    ]
    pairs = [
        (a, b) for a in _NET_LAYOUTS for b in _NET_LAYOUTS if a != b
    ]
    complete = rng.random() < 0.8
    conversions = []
    for i, (a, b) in enumerate(pairs):
        if complete or rng.random() < 0.5:
            conversions.append(
                Primitive(f"cvt{i}", "conversion", DataFormat(a), DataFormat(b))
            )
    registry = Registry(
        tuple(prims + conversions), canonical_format=DataFormat("chw")
    )
    node_costs = {}
    for layer in net.convolution_layers():
        for p in prims:
            node_costs[(layer.id, p.id)] = int(rng.integers(1, 100)) * 1000
    conversion_costs = {}
    for cv in conversions:
        for sh in net.edge_shapes():
            conversion_costs[(cv.id, sh)] = int(rng.integers(1, 50)) * 1000
    costs = CostTable(node_costs=node_costs, conversion_costs=conversion_costs)
    return net, registry, costs
