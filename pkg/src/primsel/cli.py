"""Command line interface.

Subcommands: profile (time primitives on a network), select (solve and
emit an execution plan), solve (standalone instance files), compare
(optimal vs baseline strategies), explain (show the built instance), and
run (execute a plan with the builtin kernels).

Exit codes: 0 success, 2 bad input, 3 infeasible, 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .builder import DEFAULT_CANONICAL, InfeasibleError, build_problem, select_optimal
from .dtgraph import apsp_cache, build_dt_graph
from .fileio import (
    InputError,
    dumps_json,
    load_cost_table,
    load_network,
    load_registry,
    read_json,
    save_cost_table,
    write_json,
)
from .kernels import builtin_registry, profile
from .legalize import legalize, plan_from_json, plan_to_json, validate_plan
from .model import DataFormat
from .pbqp import (
    DEFAULT_EXHAUSTIVE_BOUND,
    BoundExceededError,
    SolverInternalError,
    instance_from_json,
    solution_to_json,
    solve,
    solve_exact,
)
from .report import (
    compare,
    comparison_to_json,
    explain_edge_to_json,
    explain_to_json,
    render_comparison,
    render_explain,
    render_explain_edge,
    render_selection,
    selection_to_json,
)
from .runtime import execute_plan
from . import cost as _cost

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _registry_arg(args):
    return load_registry(args.registry) if args.registry else builtin_registry()


def _canonical_arg(args) -> DataFormat | None:
    if not getattr(args, "canonical_format", None):
        return None
    try:
        return DataFormat.parse(args.canonical_format)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load_common(args):
    net = load_network(args.net)
    registry = _registry_arg(args)
    costs = load_cost_table(args.costs)
    try:
        costs.validate_against(net, registry)
    except (ValueError, KeyError) as exc:
        raise InputError(f"cost table does not match inputs: {exc}") from exc
    tables = apsp_cache(build_dt_graph(registry), net.edge_shapes(), costs)
    return net, registry, costs, tables, _canonical_arg(args)


def _emit(args, doc: dict, text: str) -> None:
    if getattr(args, "out", None):
        write_json(args.out, doc)
    sys.stdout.write(dumps_json(doc) if args.format == "json" else text)


def _cmd_profile(args) -> int:
    if args.reps < 3:
        raise InputError(f"--reps must be at least 3, got {args.reps}")
    net = load_network(args.net)
    registry = _registry_arg(args)
    table = profile(
        net,
        registry,
        reps=args.reps,
        seed=args.seed,
        timestamp=args.timestamps,
        backend=args.backend,
    )
    save_cost_table(args.out, table)
    sys.stdout.write(
        f"profiled {len(table.node_costs)} layer timings and "
        f"{len(table.conversion_costs)} conversion timings into {args.out}\n"
    )
    return EXIT_OK


def _cmd_select(args) -> int:
    net, registry, costs, tables, canonical = _load_common(args)
    problem = build_problem(net, registry, costs, tables, canonical=canonical)
    selection = select_optimal(problem, args.exhaustive_bound)
    if not selection.feasible:
        raise InfeasibleError(
            "no finite-cost assignment exists; a required format change has "
            "no conversion chain"
        )
    plan = legalize(problem, selection)
    violations = validate_plan(plan, net)
    if violations:
        raise SolverInternalError("emitted plan does not validate: " + "; ".join(violations))
    if args.out_plan:
        write_json(args.out_plan, plan_to_json(plan))
    _emit(args, selection_to_json(problem, selection), render_selection(problem, selection))
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = instance_from_json(read_json(args.instance))
    if args.exact:
        sol = solve_exact(inst, args.exhaustive_bound)
    else:
        sol = solve(inst, args.exhaustive_bound)
    doc = solution_to_json(sol)
    text = (
        "choice: " + " ".join(str(c) for c in sol.choice) + "\n"
        f"objective: {_cost.fmt_us(sol.objective)} us\n"
        f"optimality: {sol.optimality}\n"
    )
    _emit(args, doc, text)
    if not _cost.is_finite(sol.objective):
        print("instance is infeasible: every assignment has infinite cost", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_compare(args) -> int:
    net, registry, costs, tables, canonical = _load_common(args)
    families = None
    if args.families is not None:
        families = [f for f in (s.strip() for s in args.families.split(",")) if f]
    results = compare(
        net,
        registry,
        costs,
        tables,
        families=families,
        canonical=canonical,
        bound=args.exhaustive_bound,
    )
    _emit(args, comparison_to_json(results), render_comparison(results))
    if not results[0].feasible:
        print("the optimizing strategy found no feasible assignment", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_explain(args) -> int:
    net, registry, costs, tables, canonical = _load_common(args)
    problem = build_problem(net, registry, costs, tables, canonical=canonical)
    if args.edge:
        selection = select_optimal(problem, bound=args.exhaustive_bound)
        doc = explain_edge_to_json(problem, selection, args.edge)
        _emit(args, doc, render_explain_edge(doc))
    else:
        _emit(args, explain_to_json(problem), render_explain(problem))
    return EXIT_OK


def _cmd_run(args) -> int:
    plan = plan_from_json(read_json(args.plan))
    net = load_network(args.net)
    registry = _registry_arg(args)
    result = execute_plan(plan, net, registry, seed=args.seed, backend=args.backend)
    doc = {
        "steps": [
            {
                "id": t.step_id,
                "predicted_us": _cost.to_us(t.predicted),
                "actual_us": _cost.to_us(t.actual),
            }
            for t in result.timings
        ],
        "total_predicted_us": _cost.to_us(result.total_predicted),
        "total_actual_us": _cost.to_us(result.total_actual),
    }
    lines = [f"{'step':<28} {'predicted us':>14} {'actual us':>14}"]
    for t in result.timings:
        lines.append(
            f"{t.step_id:<28} {_cost.fmt_us(t.predicted):>14} {_cost.fmt_us(t.actual):>14}"
        )
    lines.append(
        f"{'total':<28} {_cost.fmt_us(result.total_predicted):>14} "
        f"{_cost.fmt_us(result.total_actual):>14}"
    )
    _emit(args, doc, "\n".join(lines) + "\n")
    return EXIT_OK


def _add_common_select_args(sp) -> None:
    sp.add_argument("--net", required=True, help="network graph JSON")
    sp.add_argument("--costs", required=True, help="profiled cost table JSON")
    sp.add_argument("--registry", help="primitive registry JSON (default: builtin library)")
    sp.add_argument(
        "--canonical-format",
        help=f"boundary format like chw or chw:fp32 (default: registry's, else {DEFAULT_CANONICAL})",
    )
    sp.add_argument(
        "--exhaustive-bound",
        type=int,
        default=DEFAULT_EXHAUSTIVE_BOUND,
        help="largest assignment space enumerated exhaustively",
    )
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--out", help="also write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="primsel",
        description=(
            "Pick the cheapest implementation for every layer of an inference "
            "graph, accounting for data-format conversion costs."
        ),
    )
    p.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    sp = sub.add_parser("profile", help="time primitives on a network and write a cost table")
    sp.add_argument("--net", required=True)
    sp.add_argument("--registry")
    sp.add_argument("--out", required=True, help="cost table JSON to write")
    sp.add_argument("--reps", type=int, default=5, help="timed repetitions per measurement")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--timestamps", action="store_true", help="record a wall-clock timestamp")
    sp.add_argument("--backend", choices=("auto", "compiled", "python"))
    sp.set_defaults(func=_cmd_profile)

    sp = sub.add_parser("select", help="solve the selection problem and emit a plan")
    _add_common_select_args(sp)
    sp.add_argument("--out-plan", help="execution plan JSON to write")
    sp.set_defaults(func=_cmd_select)

    sp = sub.add_parser("solve", help="solve a standalone instance file")
    sp.add_argument("--instance", required=True)
    sp.add_argument(
        "--exhaustive-bound", type=int, default=DEFAULT_EXHAUSTIVE_BOUND
    )
    sp.add_argument("--exact", action="store_true", help="plain enumeration, no reductions")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--out", help="also write the JSON solution here")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("compare", help="optimal vs greedy, family and reference baselines")
    _add_common_select_args(sp)
    sp.add_argument(
        "--families",
        help="comma-separated families to baseline (default: all non-reference families)",
    )
    sp.set_defaults(func=_cmd_compare)

    sp = sub.add_parser("explain", help="show the built instance without solving it")
    _add_common_select_args(sp)
    sp.add_argument(
        "--edge",
        help="dataflow edge 'producer->consumer': show its conversion "
        "distance matrix and the chain the optimal selection uses",
    )
    sp.set_defaults(func=_cmd_explain)

    sp = sub.add_parser("run", help="execute a plan with the builtin kernels")
    sp.add_argument("--plan", required=True)
    sp.add_argument("--net", required=True)
    sp.add_argument("--registry")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--backend", choices=("auto", "compiled", "python"))
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--out", help="also write the JSON timing report here")
    sp.set_defaults(func=_cmd_run)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BoundExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverInternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())
