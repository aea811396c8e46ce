"""Unit tests for the domain model: formats, shapes, scenarios, nets, cost tables."""

import math

import pytest

from primsel.model import (
    CONSTRAINT_OPS,
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


def _scenario(**kw):
    base = dict(c=3, h=8, w=8, delta=1, k=3, m=4)
    base.update(kw)
    return Scenario(**base)


class TestDataFormat:
    def test_str_round_trip(self):
        fmt = DataFormat("hwc", "fp16")
        assert str(fmt) == "hwc:fp16"
        assert DataFormat.parse(str(fmt)) == fmt

    def test_default_element_type(self):
        assert DataFormat("chw").element_type == "fp32"

    def test_parse_requires_colon(self):
        with pytest.raises(ValueError):
            DataFormat.parse("chw")

    def test_rejects_unknown_layout(self):
        with pytest.raises(ValueError):
            DataFormat("cwhh")

    def test_rejects_empty_element_type(self):
        with pytest.raises(ValueError):
            DataFormat("chw", "")

    def test_ordering_is_total(self):
        fmts = [DataFormat("hwc"), DataFormat("chw", "fp16"), DataFormat("chw")]
        ordered = sorted(fmts)
        assert ordered[0].layout == "chw"
        assert ordered[-1].layout == "hwc"


class TestTensorShape:
    def test_volume_and_key(self):
        s = TensorShape(3, 8, 16)
        assert s.volume == 3 * 8 * 16
        assert s.key == "3x8x16"
        assert TensorShape.parse_key(s.key) == s

    def test_parse_key_rejects_bad_arity(self):
        with pytest.raises(ValueError):
            TensorShape.parse_key("3x8")

    def test_parse_key_rejects_non_ints(self):
        with pytest.raises(ValueError):
            TensorShape.parse_key("3x8xten")

    @pytest.mark.parametrize("bad", [0, -1, 2.0, True])
    def test_rejects_non_positive_dimensions(self, bad):
        with pytest.raises(ValueError):
            TensorShape(bad, 8, 8)


class TestScenario:
    def test_accepts_valid(self):
        s = _scenario()
        assert s.input_shape == TensorShape(3, 8, 8)

    @pytest.mark.parametrize("field", ["c", "h", "w", "delta", "k", "m"])
    def test_rejects_non_positive_fields(self, field):
        with pytest.raises(ValueError):
            _scenario(**{field: 0})

    def test_rejects_even_kernel(self):
        with pytest.raises(ValueError):
            _scenario(k=4)

    def test_rejects_bool_fields(self):
        with pytest.raises(ValueError):
            _scenario(delta=True)


class TestOutputShape:
    def test_unit_stride(self):
        assert output_shape(_scenario()) == TensorShape(4, 8, 8)

    def test_strided_uses_ceiling(self):
        s = _scenario(h=7, w=9, delta=2, m=5)
        assert output_shape(s) == TensorShape(5, math.ceil(7 / 2), math.ceil(9 / 2))

    def test_macc_count(self):
        s = _scenario(h=7, w=9, delta=2)
        out = output_shape(s)
        assert macc_count(s) == out.h * out.w * s.c * s.k * s.k * s.m


class TestConstraint:
    @pytest.mark.parametrize(
        "op,value,expected",
        [
            ("eq", 1, True),
            ("ne", 1, False),
            ("lt", 2, True),
            ("le", 1, True),
            ("gt", 0, True),
            ("ge", 2, False),
            ("in", (1, 3), True),
            ("in", (2, 4), False),
        ],
    )
    def test_every_operator(self, op, value, expected):
        c = Constraint("delta", op, value)
        assert c.holds(_scenario(delta=1)) is expected

    def test_rejects_unknown_field(self):
        with pytest.raises(ValueError):
            Constraint("stride", "eq", 1)

    def test_rejects_unknown_op(self):
        assert "between" not in CONSTRAINT_OPS
        with pytest.raises(ValueError):
            Constraint("k", "between", 3)

    def test_in_needs_nonempty_tuple(self):
        with pytest.raises(ValueError):
            Constraint("k", "in", ())
        with pytest.raises(ValueError):
            Constraint("k", "in", 3)

    def test_scalar_ops_need_int(self):
        with pytest.raises(ValueError):
            Constraint("k", "eq", (3,))
        with pytest.raises(ValueError):
            Constraint("k", "eq", True)


class TestPrimitive:
    def test_conversion_flag(self):
        p = Primitive("cvt", "conversion", DataFormat("chw"), DataFormat("hwc"))
        assert p.is_conversion
        q = Primitive("conv", "direct", DataFormat("chw"), DataFormat("chw"))
        assert not q.is_conversion

    def test_rejects_empty_id_or_family(self):
        with pytest.raises(ValueError):
            Primitive("", "direct", DataFormat("chw"), DataFormat("chw"))
        with pytest.raises(ValueError):
            Primitive("p", "", DataFormat("chw"), DataFormat("chw"))

    def test_applicable_joins_constraints(self):
        p = Primitive(
            "p",
            "direct",
            DataFormat("chw"),
            DataFormat("chw"),
            applicability=(Constraint("delta", "eq", 1), Constraint("k", "in", (3, 5))),
        )
        assert p.applicable(_scenario(delta=1, k=3))
        assert not p.applicable(_scenario(delta=2, k=3))
        assert not p.applicable(_scenario(delta=1, k=7))


class TestApplicablePrimitives:
    def test_preserves_registry_order(self):
        a = Primitive("a", "f", DataFormat("chw"), DataFormat("chw"))
        b = Primitive(
            "b",
            "f",
            DataFormat("chw"),
            DataFormat("chw"),
            applicability=(Constraint("delta", "eq", 2),),
        )
        c = Primitive("c", "f", DataFormat("hwc"), DataFormat("hwc"))
        got = applicable_primitives(_scenario(delta=1), [a, b, c])
        assert [p.id for p in got] == ["a", "c"]

    def test_rejects_duplicate_ids(self):
        a = Primitive("a", "f", DataFormat("chw"), DataFormat("chw"))
        with pytest.raises(ValueError):
            applicable_primitives(_scenario(), [a, a])


class TestRegistry:
    def _prims(self):
        return (
            Primitive("ref", "sum", DataFormat("chw"), DataFormat("chw")),
            Primitive("cvt", "conversion", DataFormat("chw"), DataFormat("hwc")),
        )

    def test_lookup_and_iteration(self):
        reg = Registry(self._prims(), reference_primitive="ref")
        assert [p.id for p in reg] == ["ref", "cvt"]
        assert reg.get("cvt").is_conversion
        assert reg.reference.id == "ref"
        with pytest.raises(KeyError):
            reg.get("nope")

    def test_rejects_duplicate_ids(self):
        p = Primitive("ref", "sum", DataFormat("chw"), DataFormat("chw"))
        with pytest.raises(ValueError):
            Registry((p, p))

    def test_rejects_unknown_reference(self):
        with pytest.raises(ValueError):
            Registry(self._prims(), reference_primitive="ghost")

    def test_reference_requires_tag(self):
        reg = Registry(self._prims())
        with pytest.raises(ValueError):
            reg.reference


class TestLayer:
    def test_convolution_needs_scenario(self):
        with pytest.raises(ValueError):
            Layer("conv", "convolution")

    def test_non_convolution_rejects_scenario(self):
        with pytest.raises(ValueError):
            Layer("relu", "passthrough", scenario=_scenario())

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            Layer("x", "pooling")

    def test_rejects_empty_id(self):
        with pytest.raises(ValueError):
            Layer("", "input")


def _chain_net():
    s = _scenario()
    nodes = (
        Layer("in", "input"),
        Layer("conv", "convolution", scenario=s),
        Layer("relu", "passthrough"),
        Layer("out", "output"),
    )
    edges = (
        NetEdge("in", "conv", s.input_shape),
        NetEdge("conv", "relu", output_shape(s)),
        NetEdge("relu", "out", output_shape(s)),
    )
    return NetworkGraph(nodes, edges)


class TestNetworkGraph:
    def test_accessors(self):
        net = _chain_net()
        assert net.layer("conv").kind == "convolution"
        assert [e.key for e in net.in_edges("conv")] == ["in->conv"]
        assert [e.key for e in net.out_edges("conv")] == ["conv->relu"]
        assert net.edge("in", "conv").shape == TensorShape(3, 8, 8)
        assert [l.id for l in net.convolution_layers()] == ["conv"]
        assert TensorShape(4, 8, 8) in net.edge_shapes()
        with pytest.raises(KeyError):
            net.layer("ghost")
        with pytest.raises(KeyError):
            net.edge("conv", "in")

    def test_topological_order_is_stable(self):
        net = _chain_net()
        assert net.topological_order() == ["in", "conv", "relu", "out"]

    def test_diamond_order_follows_declaration(self):
        s = _scenario()
        nodes = (
            Layer("in", "input"),
            Layer("split_a", "passthrough"),
            Layer("split_b", "passthrough"),
            Layer("join", "passthrough"),
            Layer("out", "output"),
        )
        shape = s.input_shape
        edges = (
            NetEdge("in", "split_a", shape),
            NetEdge("in", "split_b", shape),
            NetEdge("split_a", "join", shape),
            NetEdge("split_b", "join", shape),
            NetEdge("join", "out", shape),
        )
        net = NetworkGraph(nodes, edges)
        assert net.topological_order() == ["in", "split_a", "split_b", "join", "out"]

    def test_rejects_duplicate_layer_ids(self):
        with pytest.raises(ValueError):
            NetworkGraph((Layer("a", "input"), Layer("a", "output")), ())

    def test_rejects_unknown_endpoint(self):
        with pytest.raises(ValueError):
            NetworkGraph(
                (Layer("a", "input"),),
                (NetEdge("a", "ghost", TensorShape(1, 1, 1)),),
            )

    def test_rejects_self_edge(self):
        with pytest.raises(ValueError):
            NetworkGraph(
                (Layer("a", "passthrough"),),
                (NetEdge("a", "a", TensorShape(1, 1, 1)),),
            )

    def test_rejects_cycle(self):
        shape = TensorShape(1, 1, 1)
        with pytest.raises(ValueError, match="cycle"):
            NetworkGraph(
                (Layer("a", "passthrough"), Layer("b", "passthrough")),
                (NetEdge("a", "b", shape), NetEdge("b", "a", shape)),
            )

    def test_rejects_conv_output_shape_mismatch(self):
        s = _scenario()
        nodes = (Layer("conv", "convolution", scenario=s), Layer("out", "output"))
        with pytest.raises(ValueError, match="does not match"):
            NetworkGraph(nodes, (NetEdge("conv", "out", TensorShape(1, 8, 8)),))


class TestCostTable:
    def test_lookup_returns_none_when_missing(self):
        table = CostTable(node_costs={("conv", "p"): 5})
        assert table.node_cost("conv", "p") == 5
        assert table.node_cost("conv", "q") is None
        assert table.conversion_cost("cvt", TensorShape(1, 1, 1)) is None

    def test_rejects_non_int_costs(self):
        with pytest.raises(ValueError):
            CostTable(node_costs={("conv", "p"): 5.0})
        with pytest.raises(ValueError):
            CostTable(node_costs={("conv", "p"): True})
        with pytest.raises(ValueError):
            CostTable(conversion_costs={("cvt", TensorShape(1, 1, 1)): -1})

    def test_validate_against_checks_applicability(self):
        net = _chain_net()
        strided_only = Primitive(
            "strided",
            "direct",
            DataFormat("chw"),
            DataFormat("chw"),
            applicability=(Constraint("delta", "ge", 2),),
        )
        plain = Primitive("plain", "direct", DataFormat("chw"), DataFormat("chw"))
        reg = Registry((plain, strided_only))
        CostTable(node_costs={("conv", "plain"): 7}).validate_against(net, reg)
        with pytest.raises(ValueError, match="inapplicable"):
            CostTable(node_costs={("conv", "strided"): 7}).validate_against(net, reg)
        with pytest.raises(ValueError, match="non-convolution"):
            CostTable(node_costs={("relu", "plain"): 7}).validate_against(net, reg)

    def test_metadata_defaults(self):
        meta = CostTableMeta()
        assert meta.threads == 1 and meta.platform == "" and meta.timestamp == ""
