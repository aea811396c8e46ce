"""Cost-optimal implementation selection for DNN inference graphs.

Given a layer graph, a library of layer implementations that consume and
produce specific data formats, and profiled runtimes, this package picks
the implementation for every layer that minimizes total predicted time
including any data-format conversions, then emits an executable plan.
"""

from .builder import (
    Alternative,
    InfeasibleError,
    Selection,
    SelectionProblem,
    baseline_all_reference,
    baseline_family,
    baseline_greedy,
    build_problem,
    evaluate_selection,
    select_optimal,
)
from .cost import INFINITE, Cost, from_us, is_finite, to_us
from .dtgraph import (
    ApspTable,
    ConversionPath,
    DtGraph,
    apsp_cache,
    build_dt_graph,
    conversion_path,
    solve_apsp,
)
from .legalize import ExecutionPlan, PlanEdge, PlanStep, legalize, validate_plan
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
    applicable_primitives,
    macc_count,
    output_shape,
)
from .pbqp import (
    DEFAULT_EXHAUSTIVE_BOUND,
    BoundExceededError,
    PbqpEdge,
    PbqpInstance,
    PbqpSolution,
    SolverInternalError,
    evaluate,
    merge_parallel_edges,
    reduce_once,
    solve,
    solve_exact,
)
from .runtime import RunResult, execute_plan

__version__ = "0.1.0"
