"""Partitioned Boolean Quadratic Programming: instances and solvers.

An instance assigns one choice per node; the objective is the sum of the
selected node-vector entries plus, for every edge, the matrix entry
indexed by the endpoint choices.  ``solve_exact`` enumerates the whole
assignment space (the desk-scale oracle); ``solve`` runs the usual
graph-reduction scheme (R0 edge decomposition, degree-1 and degree-2
folds) and finishes irreducible residues exhaustively when small enough,
falling back to a max-degree heuristic otherwise.

All finite costs are exact integer nanoseconds; ``math.inf`` marks
forbidden assignments and saturates through every fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cost import INFINITE, Cost, is_finite, validate_cost
from .fileio import InputError, check_fields
from . import cost as _cost

DEFAULT_EXHAUSTIVE_BOUND = 10**6

PROVEN_OPTIMAL = "proven-optimal"
HEURISTIC = "heuristic"


class BoundExceededError(Exception):
    """Raised when an exhaustive solve would exceed the assignment-space bound."""


class SolverInternalError(RuntimeError):
    """A solver invariant failed; the CLI maps this to exit code 4."""


Matrix = tuple[tuple[Cost, ...], ...]


@dataclass(frozen=True)
class PbqpEdge:
    a: int
    b: int
    matrix: Matrix


@dataclass(frozen=True)
class PbqpInstance:
    """Normalized instance: edges oriented a < b, one edge per pair, no self-edges."""

    vectors: tuple[tuple[Cost, ...], ...]
    edges: tuple[PbqpEdge, ...]

    def __post_init__(self):
        n = len(self.vectors)
        for u, vec in enumerate(self.vectors):
            if not vec:
                raise ValueError(f"node {u} has an empty cost vector")
            for x in vec:
                validate_cost(x)
        seen = set()
        for e in self.edges:
            if not (0 <= e.a < n and 0 <= e.b < n):
                raise ValueError(f"edge ({e.a},{e.b}) references unknown nodes")
            if e.a >= e.b:
                raise ValueError(f"edge ({e.a},{e.b}) not normalized to a < b")
            if (e.a, e.b) in seen:
                raise ValueError(f"duplicate edge ({e.a},{e.b}); merge before construction")
            seen.add((e.a, e.b))
            if len(e.matrix) != len(self.vectors[e.a]):
                raise ValueError(f"edge ({e.a},{e.b}) matrix has {len(e.matrix)} rows, "
                                 f"expected {len(self.vectors[e.a])}")
            for row in e.matrix:
                if len(row) != len(self.vectors[e.b]):
                    raise ValueError(f"edge ({e.a},{e.b}) matrix row width {len(row)}, "
                                     f"expected {len(self.vectors[e.b])}")
                for x in row:
                    validate_cost(x)

    @classmethod
    def build(
        cls,
        vectors: Sequence[Sequence[Cost]],
        edges: Iterable[tuple[int, int, Sequence[Sequence[Cost]]]] = (),
    ) -> "PbqpInstance":
        vecs = tuple(tuple(v) for v in vectors)
        return cls(vecs, merge_parallel_edges(edges, vecs))

    @property
    def assignment_space(self) -> int:
        return math.prod(len(v) for v in self.vectors)


def merge_parallel_edges(
    edges: Iterable[tuple[int, int, Sequence[Sequence[Cost]]]],
    vectors: Sequence[Sequence[Cost]],
) -> tuple[PbqpEdge, ...]:
    """Normalize orientation to a < b (transposing) and sum duplicate edges."""
    n = len(vectors)
    merged: dict[tuple[int, int], list[list[Cost]]] = {}
    for a, b, matrix in edges:
        if a == b:
            raise ValueError(f"self-edge on node {a}")
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"edge ({a},{b}) references unknown nodes")
        rows = [list(r) for r in matrix]
        if a > b:
            a, b = b, a
            rows = [list(col) for col in zip(*rows)] if rows else []
        if len(rows) != len(vectors[a]) or any(len(r) != len(vectors[b]) for r in rows):
            raise ValueError(f"edge ({a},{b}) matrix dimensions do not match its endpoints")
        cur = merged.get((a, b))
        if cur is None:
            merged[(a, b)] = rows
        else:
            for i, row in enumerate(rows):
                for j, x in enumerate(row):
                    cur[i][j] = cur[i][j] + x
    return tuple(
        PbqpEdge(a, b, tuple(tuple(r) for r in merged[(a, b)]))
        for (a, b) in sorted(merged)
    )


@dataclass(frozen=True)
class PbqpSolution:
    choice: tuple[int, ...]
    objective: Cost
    optimality: str


def evaluate(inst: PbqpInstance, choice: Sequence[int]) -> Cost:
    """Saturating objective of one assignment."""
    if len(choice) != len(inst.vectors):
        raise ValueError(f"choice length {len(choice)} != node count {len(inst.vectors)}")
    total: Cost = 0
    for u, r in enumerate(choice):
        vec = inst.vectors[u]
        if not 0 <= r < len(vec):
            raise ValueError(f"choice {r} out of range for node {u} (k={len(vec)})")
        total = total + vec[r]
    for e in inst.edges:
        total = total + e.matrix[choice[e.a]][choice[e.b]]
    return total


def _check_objective(inst: PbqpInstance, sol: PbqpSolution) -> PbqpSolution:
    recomputed = evaluate(inst, sol.choice)
    if recomputed != sol.objective:
        raise SolverInternalError(
            f"objective {sol.objective} does not match recomputed {recomputed}"
        )
    return sol


def _argmin(values: Sequence[Cost]) -> int:
    best, best_r = None, 0
    for r, v in enumerate(values):
        if best is None or v < best:
            best, best_r = v, r
    return best_r


def _enumerate(
    vectors: Sequence[Sequence[Cost]],
    edges: Iterable[tuple[int, int, Sequence[Sequence[Cost]]]],
) -> tuple[tuple[int, ...], Cost]:
    """Full enumeration; ties resolved to the lexicographically smallest choice."""
    n = len(vectors)
    if n == 0:
        return (), 0
    edge_list = list(edges)
    finite = [x for v in vectors for x in v if is_finite(x)]
    finite += [x for _, _, m in edge_list for row in m for x in row if is_finite(x)]
    terms = n + len(edge_list)
    if finite and max(finite) * terms >= 2**53:
        return _enumerate_py(vectors, edge_list)
    ks = tuple(len(v) for v in vectors)
    full = np.zeros(ks, dtype=np.float64)
    for u, vec in enumerate(vectors):
        shape = [1] * n
        shape[u] = ks[u]
        full += np.asarray([float(x) for x in vec], dtype=np.float64).reshape(shape)
    for a, b, matrix in edge_list:
        shape = [1] * n
        shape[a], shape[b] = ks[a], ks[b]
        flat = [float(x) for row in matrix for x in row]
        full += np.asarray(flat, dtype=np.float64).reshape(shape)
    flat_idx = int(np.argmin(full))
    choice = tuple(int(i) for i in np.unravel_index(flat_idx, ks))
    best = float(full.reshape(-1)[flat_idx])
    objective: Cost = INFINITE if math.isinf(best) else int(best)
    return choice, objective


def _enumerate_py(vectors, edge_list):
    # Exact-arithmetic path for costs too large for float64; rarely taken.
    n = len(vectors)
    back: list[list[tuple[int, Sequence[Sequence[Cost]]]]] = [[] for _ in range(n)]
    for a, b, matrix in edge_list:
        if a > b:
            a, b = b, a
            matrix = [list(col) for col in zip(*matrix)]
        back[b].append((a, matrix))
    best_obj: Cost | None = None
    best_choice: tuple[int, ...] | None = None
    choice = [0] * n

    def rec(u: int, acc: Cost) -> None:
        nonlocal best_obj, best_choice
        if u == n:
            if best_obj is None or acc < best_obj:
                best_obj, best_choice = acc, tuple(choice)
            return
        for r, node_cost in enumerate(vectors[u]):
            add = node_cost
            for a, matrix in back[u]:
                add = add + matrix[choice[a]][r]
            choice[u] = r
            rec(u + 1, acc + add)

    rec(0, 0)
    assert best_choice is not None and best_obj is not None
    return best_choice, best_obj


def solve_exact(inst: PbqpInstance, bound: int = DEFAULT_EXHAUSTIVE_BOUND) -> PbqpSolution:
    """Globally minimal assignment by exhaustive enumeration (desk-scale oracle)."""
    space = inst.assignment_space
    if space > bound:
        raise BoundExceededError(
            f"assignment space {space} exceeds the exhaustive bound {bound}"
        )
    choice, objective = _enumerate(
        inst.vectors, [(e.a, e.b, e.matrix) for e in inst.edges]
    )
    return _check_objective(inst, PbqpSolution(choice, objective, PROVEN_OPTIMAL))


class _Reducer:
    """Mutable working copy of an instance plus the elimination trail."""

    def __init__(self, inst: PbqpInstance):
        self.n = len(inst.vectors)
        self.vectors: dict[int, list[Cost]] = {u: list(v) for u, v in enumerate(inst.vectors)}
        self.index_map: dict[int, list[int]] = {
            u: list(range(len(v))) for u, v in enumerate(inst.vectors)
        }
        self.mats: dict[tuple[int, int], list[list[Cost]]] = {}
        self.neighbors: dict[int, set[int]] = {u: set() for u in range(self.n)}
        for e in inst.edges:
            self.mats[(e.a, e.b)] = [list(row) for row in e.matrix]
            self.neighbors[e.a].add(e.b)
            self.neighbors[e.b].add(e.a)
        self.alive = set(range(self.n))
        self.records: list[tuple] = []
        self.heuristic = False
        self.infeasible = False

    # -- adjacency helpers ----------------------------------------------------

    def mat(self, u: int, v: int) -> list[list[Cost]]:
        """Copy of the (u,v) matrix with rows indexed by u's choices."""
        if u < v:
            return [list(row) for row in self.mats[(u, v)]]
        return [list(col) for col in zip(*self.mats[(v, u)])]

    def set_mat(self, u: int, v: int, rows_u: list[list[Cost]]) -> None:
        if u < v:
            self.mats[(u, v)] = rows_u
        else:
            self.mats[(v, u)] = [list(col) for col in zip(*rows_u)]
        self.neighbors[u].add(v)
        self.neighbors[v].add(u)

    def mat_row(self, u: int, v: int, r: int) -> list[Cost]:
        if u < v:
            return self.mats[(u, v)][r]
        return [row[r] for row in self.mats[(v, u)]]

    def drop_edge(self, u: int, v: int) -> None:
        del self.mats[(min(u, v), max(u, v))]
        self.neighbors[u].discard(v)
        self.neighbors[v].discard(u)

    def remove_node(self, u: int) -> None:
        for v in list(self.neighbors[u]):
            self.drop_edge(u, v)
        self.alive.discard(u)
        del self.vectors[u]
        del self.index_map[u]

    def _delete_choice(self, u: int, r: int) -> None:
        del self.vectors[u][r]
        del self.index_map[u][r]
        for v in self.neighbors[u]:
            key = (min(u, v), max(u, v))
            if u == key[0]:
                del self.mats[key][r]
            else:
                for row in self.mats[key]:
                    del row[r]

    # -- pruning --------------------------------------------------------------

    def prune_all(self) -> None:
        """Delete choices that cannot appear in any finite assignment."""
        changed = True
        while changed and not self.infeasible:
            changed = False
            for u in sorted(self.alive):
                vec = self.vectors[u]
                kill = []
                for r in range(len(vec)):
                    if vec[r] == INFINITE:
                        kill.append(r)
                        continue
                    for v in self.neighbors[u]:
                        if all(x == INFINITE for x in self.mat_row(u, v, r)):
                            kill.append(r)
                            break
                for r in reversed(kill):
                    self._delete_choice(u, r)
                if kill:
                    changed = True
                    if not self.vectors[u]:
                        self.infeasible = True
                        return

    # -- reductions -----------------------------------------------------------

    def try_r0(self) -> bool:
        """Fold one row+column decomposable edge matrix into its endpoint vectors."""
        for key in sorted(self.mats):
            a, b = key
            M = self.mats[key]
            row_min = [min(row) for row in M]
            cols = len(self.vectors[b])
            col_min = [
                min(
                    (M[i][j] - row_min[i]) if M[i][j] != INFINITE else INFINITE
                    for i in range(len(M))
                )
                for j in range(cols)
            ]
            if all(
                M[i][j] == row_min[i] + col_min[j]
                for i in range(len(M))
                for j in range(cols)
            ):
                for i in range(len(M)):
                    self.vectors[a][i] = self.vectors[a][i] + row_min[i]
                for j in range(cols):
                    self.vectors[b][j] = self.vectors[b][j] + col_min[j]
                self.drop_edge(a, b)
                return True
        return False

    def _find_degree(self, d: int) -> int | None:
        for u in sorted(self.alive):
            if len(self.neighbors[u]) == d:
                return u
        return None

    def eliminate_isolated(self, u: int) -> None:
        self.records.append(("pick", u, list(self.vectors[u]), list(self.index_map[u])))
        self.remove_node(u)

    def apply_ri(self, v: int) -> None:
        """Fold a degree-1 node into its neighbor's vector."""
        (u,) = self.neighbors[v]
        M = self.mat(u, v)
        cv = list(self.vectors[v])
        self.records.append(
            ("ri", v, u, M, cv, list(self.index_map[u]), list(self.index_map[v]))
        )
        for i in range(len(self.vectors[u])):
            best = min(M[i][j] + cv[j] for j in range(len(cv)))
            self.vectors[u][i] = self.vectors[u][i] + best
        self.remove_node(v)

    def apply_rii(self, v: int) -> None:
        """Fold a degree-2 node into a (possibly merged) edge between its neighbors."""
        u, w = sorted(self.neighbors[v])
        Muv = self.mat(u, v)
        Mvw = self.mat(v, w)
        cv = list(self.vectors[v])
        self.records.append(
            (
                "rii", v, u, w, Muv, Mvw, cv,
                list(self.index_map[u]), list(self.index_map[v]), list(self.index_map[w]),
            )
        )
        kv = len(cv)
        delta = [
            [
                min(cv[j] + Muv[i][j] + Mvw[j][l] for j in range(kv))
                for l in range(len(self.vectors[w]))
            ]
            for i in range(len(self.vectors[u]))
        ]
        self.remove_node(v)
        if w in self.neighbors[u]:
            existing = self.mat(u, w)
            merged = [
                [existing[i][l] + delta[i][l] for l in range(len(row))]
                for i, row in enumerate(delta)
            ]
            self.set_mat(u, w, merged)
        else:
            self.set_mat(u, w, delta)

    def apply_rn(self) -> None:
        """Commit the locally best choice of a maximum-degree node and fold it away."""
        u = min(self.alive, key=lambda x: (-len(self.neighbors[x]), x))
        scores = []
        for r in range(len(self.vectors[u])):
            h = self.vectors[u][r]
            for v in self.neighbors[u]:
                row = self.mat_row(u, v, r)
                h = h + min(row[j] + self.vectors[v][j] for j in range(len(row)))
            scores.append(h)
        r_star = _argmin(scores)
        self.records.append(("rn", u, r_star, list(self.index_map[u])))
        for v in sorted(self.neighbors[u]):
            row = self.mat_row(u, v, r_star)
            for j in range(len(row)):
                self.vectors[v][j] = self.vectors[v][j] + row[j]
        self.remove_node(u)
        self.heuristic = True

    def reduce_step(self) -> str | None:
        """One R0/RI/RII application (used standalone for soundness testing)."""
        if self.try_r0():
            return "r0"
        v = self._find_degree(1)
        if v is not None:
            self.apply_ri(v)
            return "ri"
        v = self._find_degree(2)
        if v is not None:
            self.apply_rii(v)
            self.prune_all()
            return "rii"
        return None

    def reduce_fixpoint(self) -> None:
        self.prune_all()
        while not self.infeasible:
            if self.try_r0():
                continue
            u = self._find_degree(0)
            if u is not None:
                self.eliminate_isolated(u)
                continue
            v = self._find_degree(1)
            if v is not None:
                self.apply_ri(v)
                continue
            v = self._find_degree(2)
            if v is not None:
                self.apply_rii(v)
                self.prune_all()
                continue
            break

    # -- residue + back-propagation -------------------------------------------

    def residue_space(self) -> int:
        return math.prod(len(self.vectors[u]) for u in self.alive)

    def solve_residue_exact(self) -> dict[int, int]:
        order = sorted(self.alive)
        pos = {u: i for i, u in enumerate(order)}
        vectors = [self.vectors[u] for u in order]
        edges = [(pos[a], pos[b], self.mats[(a, b)]) for (a, b) in sorted(self.mats)]
        choice, _ = _enumerate(vectors, edges)
        return {u: choice[pos[u]] for u in order}

    def back_propagate(self, residue_choices: dict[int, int]) -> tuple[int, ...]:
        orig: dict[int, int] = {
            u: self.index_map[u][r] for u, r in residue_choices.items()
        }
        for rec in reversed(self.records):
            kind = rec[0]
            if kind == "pick":
                _, u, cu, umap = rec
                orig[u] = umap[_argmin(cu)]
            elif kind == "rn":
                _, u, r, umap = rec
                orig[u] = umap[r]
            elif kind == "ri":
                _, v, u, M, cv, umap, vmap = rec
                i = umap.index(orig[u])
                r = _argmin([M[i][j] + cv[j] for j in range(len(cv))])
                orig[v] = vmap[r]
            else:  # rii
                _, v, u, w, Muv, Mvw, cv, umap, vmap, wmap = rec
                i = umap.index(orig[u])
                l = wmap.index(orig[w])
                r = _argmin([cv[j] + Muv[i][j] + Mvw[j][l] for j in range(len(cv))])
                orig[v] = vmap[r]
        return tuple(orig[u] for u in range(self.n))

    def materialize(self) -> PbqpInstance:
        """Snapshot the current reduced graph as a standalone instance."""
        order = sorted(self.alive)
        pos = {u: i for i, u in enumerate(order)}
        vectors = [tuple(self.vectors[u]) for u in order]
        edges = [
            (pos[a], pos[b], self.mats[(a, b)]) for (a, b) in sorted(self.mats)
        ]
        return PbqpInstance.build(vectors, edges)


def reduce_once(inst: PbqpInstance) -> tuple[str, PbqpInstance] | None:
    """Prune, then apply the first applicable R0/RI/RII step; None when irreducible.

    The reduced instance has the same optimal objective as the input, which
    is what the soundness tests check.
    """
    work = _Reducer(inst)
    work.prune_all()
    if work.infeasible:
        return None
    kind = work.reduce_step()
    if kind is None or work.infeasible:
        return None
    return kind, work.materialize()


def solve(
    inst: PbqpInstance, exhaustive_bound: int | None = DEFAULT_EXHAUSTIVE_BOUND
) -> PbqpSolution:
    """Reduce to a fixpoint, then finish the residue exhaustively or heuristically.

    With the exhaustive fallback enabled (bound > 0) the result is proven
    optimal whenever no RN step was needed, i.e. whenever every residue fit
    inside the bound.
    """
    work = _Reducer(inst)
    residue_choices: dict[int, int] = {}
    while True:
        work.reduce_fixpoint()
        if work.infeasible or not work.alive:
            break
        if exhaustive_bound and work.residue_space() <= exhaustive_bound:
            residue_choices = work.solve_residue_exact()
            break
        work.apply_rn()
    if work.infeasible:
        sol = PbqpSolution(tuple(0 for _ in inst.vectors), INFINITE, PROVEN_OPTIMAL)
        return _check_objective(inst, sol)
    choice = work.back_propagate(residue_choices)
    objective = evaluate(inst, choice)
    flag = HEURISTIC if work.heuristic else PROVEN_OPTIMAL
    return PbqpSolution(choice, objective, flag)


# -- standalone instance / solution files -------------------------------------

def instance_from_json(obj) -> PbqpInstance:
    check_fields(obj, ("nodes", "edges"), (), "pbqp instance")
    if not isinstance(obj["nodes"], list):
        raise InputError("pbqp instance: nodes must be a list of cost arrays")
    vectors = []
    for i, arr in enumerate(obj["nodes"]):
        if not isinstance(arr, list) or not arr:
            raise InputError(f"pbqp instance node #{i}: expected a nonempty cost array")
        try:
            vectors.append(tuple(_cost.from_us(x) for x in arr))
        except ValueError as exc:
            raise InputError(f"pbqp instance node #{i}: {exc}") from exc
    edges = []
    for i, edge in enumerate(obj["edges"]):
        ctx = f"pbqp instance edge #{i}"
        check_fields(edge, ("a", "b", "matrix"), (), ctx)
        a, b, matrix = edge["a"], edge["b"], edge["matrix"]
        if not isinstance(a, int) or not isinstance(b, int):
            raise InputError(f"{ctx}: endpoints must be node indices")
        if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
            raise InputError(f"{ctx}: matrix must be a list of rows")
        try:
            rows = [[_cost.from_us(x) for x in row] for row in matrix]
        except ValueError as exc:
            raise InputError(f"{ctx}: {exc}") from exc
        edges.append((a, b, rows))
    try:
        return PbqpInstance.build(vectors, edges)
    except ValueError as exc:
        raise InputError(f"pbqp instance: {exc}") from exc


def instance_to_json(inst: PbqpInstance) -> dict:
    return {
        "nodes": [[_cost.to_us(x) for x in vec] for vec in inst.vectors],
        "edges": [
            {"a": e.a, "b": e.b, "matrix": [[_cost.to_us(x) for x in row] for row in e.matrix]}
            for e in inst.edges
        ],
    }


def solution_to_json(sol: PbqpSolution) -> dict:
    return {
        "choice": list(sol.choice),
        "objective_us": _cost.to_us(sol.objective),
        "optimality": sol.optimality,
    }
