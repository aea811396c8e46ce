"""Unit tests for executing legalized plans with the builtin kernels."""

import dataclasses

import numpy as np
import pytest

from primsel.builder import build_problem, complete_with_fixed, select_optimal
from primsel.dtgraph import apsp_cache, build_dt_graph
from primsel.fileio import InputError, load_cost_table, load_network, load_registry
from primsel.kernels.library import builtin_registry
from primsel.kernels.tensors import random_kernel, random_tensor
from primsel.legalize import legalize
from primsel.model import (
    CostTable,
    DataFormat,
    Layer,
    NetEdge,
    NetworkGraph,
    Scenario,
    output_shape,
)
from primsel.runtime import _layer_rng, execute_plan

from helpers import conv_oracle

CHW = DataFormat("chw")

S = Scenario(2, 6, 6, 1, 3, 3)


def _net():
    return NetworkGraph(
        (
            Layer("in", "input"),
            Layer("conv", "convolution", S),
            Layer("relu", "passthrough"),
            Layer("out", "output"),
        ),
        (
            NetEdge("in", "conv", S.input_shape),
            NetEdge("conv", "relu", output_shape(S)),
            NetEdge("relu", "out", output_shape(S)),
        ),
    )


def _setup(conv_us):
    """Builtin registry, synthetic costs (µs per conv primitive, 2 µs conversions)."""
    net = _net()
    registry = builtin_registry()
    costs = CostTable(
        node_costs={("conv", pid): us * 1000 for pid, us in conv_us.items()},
        conversion_costs={
            (p.id, sh): 2000
            for p in registry
            if p.is_conversion
            for sh in net.edge_shapes()
        },
    )
    tables = apsp_cache(build_dt_graph(registry), net.edge_shapes(), costs)
    return net, registry, costs, tables


def _oracle_output(seed):
    inp = random_tensor(S.input_shape, CHW, _layer_rng(seed, "in"))
    ker = random_kernel(S.m, S.c, S.k, _layer_rng(seed, "conv"))
    return conv_oracle(inp.data, ker, S.delta)


def _rel_err(got, want):
    return float(np.max(np.abs(got.astype(np.float64) - want))) / max(
        1.0, float(np.max(np.abs(want)))
    )


class TestExecutePlan:
    def test_chw_plan_runs_without_conversions(self):
        net, registry, costs, tables = _setup({"conv_direct_chw": 1})
        plan = legalize(
            (p := build_problem(net, registry, costs, tables)), select_optimal(p)
        )
        assert [s.id for s in plan.steps] == ["in", "conv", "relu", "out"]
        res = execute_plan(plan, net, registry, seed=7)
        assert set(res.outputs) == {"out"}
        assert _rel_err(res.outputs["out"], _oracle_output(7)) <= 1e-5
        assert res.total_predicted == plan.total_predicted
        assert res.total_actual == sum(t.actual for t in res.timings)
        assert all(t.actual >= 1 for t in res.timings)
        assert [t.step_id for t in res.timings] == [s.id for s in plan.steps]

    def test_hwc_plan_inserts_and_executes_conversions(self):
        net, registry, costs, tables = _setup(
            {"conv_direct_chw": 10, "conv_direct_hwc": 1}
        )
        plan = legalize(
            (p := build_problem(net, registry, costs, tables)), select_optimal(p)
        )
        assert plan.step("conv").primitive_id == "conv_direct_hwc"
        assert plan.total_predicted == 5000  # 1 µs node + two 2 µs conversions
        conversions = [s for s in plan.steps if s.id not in {n.id for n in net.nodes}]
        assert [s.primitive_id for s in conversions] == ["cvt_chw_hwc", "cvt_hwc_chw"]
        res = execute_plan(plan, net, registry, seed=7)
        assert _rel_err(res.outputs["out"], _oracle_output(7)) <= 1e-5

    @pytest.mark.parametrize(
        "prim",
        ["conv_sum2d_chw", "conv_direct_chw", "conv_direct_hwc", "conv_im2col_chw"],
    )
    def test_every_builtin_body_reproduces_the_oracle(self, prim):
        net, registry, costs, tables = _setup(
            {
                "conv_sum2d_chw": 50,
                "conv_direct_chw": 10,
                "conv_direct_hwc": 10,
                "conv_im2col_chw": 10,
            }
        )
        sel = complete_with_fixed(net, registry, costs, tables, {"conv": prim})
        plan = legalize(build_problem(net, registry, costs, tables, restrict={"conv": prim}), sel)
        res = execute_plan(plan, net, registry, seed=11)
        assert _rel_err(res.outputs["out"], _oracle_output(11)) <= 1e-5

    def test_same_seed_is_bitwise_deterministic(self):
        net, registry, costs, tables = _setup({"conv_direct_chw": 1})
        plan = legalize(
            (p := build_problem(net, registry, costs, tables)), select_optimal(p)
        )
        a = execute_plan(plan, net, registry, seed=3)
        b = execute_plan(plan, net, registry, seed=3)
        assert np.array_equal(a.outputs["out"], b.outputs["out"])
        c = execute_plan(plan, net, registry, seed=4)
        assert not np.array_equal(a.outputs["out"], c.outputs["out"])

    def test_invalid_plan_is_rejected(self):
        net, registry, costs, tables = _setup({"conv_direct_chw": 1})
        plan = legalize(
            (p := build_problem(net, registry, costs, tables)), select_optimal(p)
        )
        bad = dataclasses.replace(plan, total_predicted=plan.total_predicted + 1)
        with pytest.raises(InputError, match="does not validate"):
            execute_plan(bad, net, registry)

    def test_primitive_without_body_fails_cleanly(self, fixtures_dir):
        net = load_network(fixtures_dir / "greedy_trap_net.json")
        registry = load_registry(fixtures_dir / "greedy_trap_registry.json")
        costs = load_cost_table(fixtures_dir / "greedy_trap_costs.json")
        tables = apsp_cache(build_dt_graph(registry), net.edge_shapes(), costs)
        plan = legalize(
            (p := build_problem(net, registry, costs, tables)), select_optimal(p)
        )
        with pytest.raises(InputError, match="no executable implementation"):
            execute_plan(plan, net, registry)

    def test_unknown_primitive_in_plan(self):
        net, registry, costs, tables = _setup(
            {"conv_direct_chw": 10, "conv_direct_hwc": 1}
        )
        plan = legalize(
            (p := build_problem(net, registry, costs, tables)), select_optimal(p)
        )
        steps = tuple(
            dataclasses.replace(s, primitive_id="nope")
            if s.primitive_id == "cvt_chw_hwc"
            else s
            for s in plan.steps
        )
        bad = dataclasses.replace(plan, steps=steps)
        with pytest.raises(InputError, match="unknown primitive"):
            execute_plan(bad, net, registry)
