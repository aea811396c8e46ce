"""Turn a selection into an executable plan by materializing format conversions.

A selection may pick implementations whose formats disagree across a
dataflow edge.  Legalization bisects every mismatched edge with the
recorded cheapest conversion chain, producing a plan whose every edge
connects matching formats.  Step order is executable as written: each
step appears after everything it consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import cost as _cost
from .builder import InfeasibleError, Selection, SelectionProblem
from .cost import Cost, validate_cost
from .dtgraph import conversion_path
from .fileio import InputError, check_fields, format_from_json, format_to_json, shape_from_json, shape_to_json
from .model import DataFormat, NetworkGraph, TensorShape
from .pbqp import SolverInternalError


@dataclass(frozen=True)
class PlanStep:
    """One executable action: a layer's chosen implementation or an inserted
    conversion.  ``shape`` is the tensor the step produces (for a network
    output, the tensor it consumes)."""

    id: str
    primitive_id: str | None
    input_format: DataFormat | None
    output_format: DataFormat | None
    shape: TensorShape
    predicted: int

    def __post_init__(self):
        validate_cost(self.predicted)


@dataclass(frozen=True)
class PlanEdge:
    producer: str
    consumer: str
    shape: TensorShape


@dataclass(frozen=True)
class ExecutionPlan:
    steps: tuple[PlanStep, ...]
    edges: tuple[PlanEdge, ...]
    total_predicted: int

    def step(self, step_id: str) -> PlanStep:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)


def _conversion_step_id(producer: str, consumer: str, position: int) -> str:
    return f"cvt:{producer}->{consumer}:{position}"


def _step_shape(problem: SelectionProblem, nid: str) -> TensorShape:
    layer = problem.net.layer(nid)
    outs = problem.net.out_edges(nid)
    if outs:
        return outs[0].shape
    ins = problem.net.in_edges(nid)
    if ins:
        return ins[0].shape
    raise InputError(f"layer {nid} is disconnected; nothing to plan")


def legalize(problem: SelectionProblem, selection: Selection) -> ExecutionPlan:
    """Emit the plan for a feasible selection, inserting conversion chains."""
    if not selection.feasible:
        raise InfeasibleError(
            "selection is infeasible; some required format change has no "
            "conversion chain"
        )
    steps: list[PlanStep] = []
    edges: list[PlanEdge] = []
    ids = set()

    def emit(step: PlanStep) -> None:
        if step.id in ids:
            raise SolverInternalError(f"duplicate plan step id {step.id!r}")
        ids.add(step.id)
        steps.append(step)

    for nid in problem.node_order:
        alt = selection.assignments[nid]
        emit(
            PlanStep(
                id=nid,
                primitive_id=alt.primitive_id,
                input_format=alt.input_format,
                output_format=alt.output_format,
                shape=_step_shape(problem, nid),
                predicted=alt.cost,
            )
        )
        for e in problem.net.out_edges(nid):
            src = selection.assignments[e.producer].output_format
            dst = selection.assignments[e.consumer].input_format
            if src == dst:
                edges.append(PlanEdge(e.producer, e.consumer, e.shape))
                continue
            path = conversion_path(problem.tables[e.shape], src, dst)
            if not path.reachable:
                raise InfeasibleError(
                    f"no conversion chain from {src} to {dst} for edge {e.key}"
                )
            prev = e.producer
            for i, hop in enumerate(path.steps):
                sid = _conversion_step_id(e.producer, e.consumer, i)
                emit(
                    PlanStep(
                        id=sid,
                        primitive_id=hop.primitive_id,
                        input_format=hop.src,
                        output_format=hop.dst,
                        shape=e.shape,
                        predicted=hop.cost,
                    )
                )
                edges.append(PlanEdge(prev, sid, e.shape))
                prev = sid
            edges.append(PlanEdge(prev, e.consumer, e.shape))
    total = sum(s.predicted for s in steps)
    if total != selection.predicted_total:
        raise SolverInternalError(
            f"plan total {total} does not match predicted {selection.predicted_total}"
        )
    return ExecutionPlan(tuple(steps), tuple(edges), total)


def validate_plan(plan: ExecutionPlan, net: NetworkGraph | None = None) -> list[str]:
    """Structural and format checks; returns human-readable violations."""
    problems: list[str] = []
    seen: dict[str, int] = {}
    for i, s in enumerate(plan.steps):
        if s.id in seen:
            problems.append(f"duplicate step id {s.id!r}")
        seen[s.id] = i
    for e in plan.edges:
        if e.producer not in seen or e.consumer not in seen:
            problems.append(f"edge {e.producer}->{e.consumer} references a missing step")
            continue
        prod = plan.steps[seen[e.producer]]
        cons = plan.steps[seen[e.consumer]]
        if seen[e.producer] >= seen[e.consumer]:
            problems.append(
                f"step {e.consumer} runs before its input {e.producer}"
            )
        if prod.output_format is None:
            problems.append(f"step {e.producer} produces nothing but feeds {e.consumer}")
        elif cons.input_format is None:
            problems.append(f"step {e.consumer} consumes nothing but is fed by {e.producer}")
        elif prod.output_format != cons.input_format:
            problems.append(
                f"format mismatch on {e.producer}->{e.consumer}: "
                f"{prod.output_format} vs {cons.input_format}"
            )
    if plan.total_predicted != sum(s.predicted for s in plan.steps):
        problems.append("total_predicted does not equal the sum of step predictions")
    if net is not None:
        layer_ids = {n.id for n in net.nodes}
        for nid in layer_ids:
            if nid not in seen:
                problems.append(f"layer {nid} has no plan step")
        for e in net.edges:
            if not _chain_exists(plan, seen, layer_ids, e.producer, e.consumer, e.shape):
                problems.append(
                    f"no conversion-respecting chain for network edge {e.key}"
                )
    return problems


def _chain_exists(plan, seen, layer_ids, producer, consumer, shape) -> bool:
    """Follow plan edges from ``producer``, crossing only inserted steps."""
    if producer not in seen or consumer not in seen:
        return False
    frontier = [producer]
    visited = set()
    while frontier:
        cur = frontier.pop()
        if cur in visited:
            continue
        visited.add(cur)
        for e in plan.edges:
            if e.producer != cur or e.shape != shape:
                continue
            if e.consumer == consumer:
                return True
            if e.consumer not in layer_ids:
                frontier.append(e.consumer)
    return False


# -- plan files ---------------------------------------------------------------

def plan_to_json(plan: ExecutionPlan) -> dict:
    return {
        "steps": [
            {
                "id": s.id,
                "primitive": s.primitive_id,
                "input_format": None if s.input_format is None else format_to_json(s.input_format),
                "output_format": None if s.output_format is None else format_to_json(s.output_format),
                "shape": shape_to_json(s.shape),
                "predicted_us": _cost.to_us(s.predicted),
            }
            for s in plan.steps
        ],
        "edges": [
            {"producer": e.producer, "consumer": e.consumer, "shape": shape_to_json(e.shape)}
            for e in plan.edges
        ],
        "total_predicted_us": _cost.to_us(plan.total_predicted),
    }


def plan_from_json(obj) -> ExecutionPlan:
    check_fields(obj, ("steps", "edges", "total_predicted_us"), (), "plan")
    steps = []
    for i, raw in enumerate(obj["steps"]):
        ctx = f"plan step #{i}"
        check_fields(
            raw,
            ("id", "primitive", "input_format", "output_format", "shape", "predicted_us"),
            (),
            ctx,
        )
        try:
            fin = None if raw["input_format"] is None else format_from_json(raw["input_format"], ctx)
            fout = None if raw["output_format"] is None else format_from_json(raw["output_format"], ctx)
            predicted = _cost.from_us(raw["predicted_us"])
            if predicted == _cost.INFINITE:
                raise ValueError("step predictions must be finite")
            steps.append(
                PlanStep(
                    id=str(raw["id"]),
                    primitive_id=raw["primitive"],
                    input_format=fin,
                    output_format=fout,
                    shape=shape_from_json(raw["shape"], ctx),
                    predicted=predicted,
                )
            )
        except ValueError as exc:
            raise InputError(f"{ctx}: {exc}") from exc
    edges = []
    for i, raw in enumerate(obj["edges"]):
        ctx = f"plan edge #{i}"
        check_fields(raw, ("producer", "consumer", "shape"), (), ctx)
        try:
            edges.append(
                PlanEdge(str(raw["producer"]), str(raw["consumer"]), shape_from_json(raw["shape"], ctx))
            )
        except ValueError as exc:
            raise InputError(f"{ctx}: {exc}") from exc
    try:
        total = _cost.from_us(obj["total_predicted_us"])
        if total == _cost.INFINITE:
            raise ValueError("plan total must be finite")
    except ValueError as exc:
        raise InputError(f"plan: {exc}") from exc
    return ExecutionPlan(tuple(steps), tuple(edges), total)
